/**
 * Client-side template syntax checking for inline dialog validation:
 * an opening {{ needs its }}, placeholders and path steps must be non-empty.
 */

export function templateSyntaxError(text: string): string | null {
  let pos = 0;
  for (;;) {
    const start = text.indexOf("{{", pos);
    if (start < 0) return null;
    const end = text.indexOf("}}", start + 2);
    if (end < 0) return "unbalanced braces: no closing }} for placeholder";
    const inner = text.slice(start + 2, end).trim();
    if (!inner) return "empty placeholder";
    for (const step of inner.split(".")) {
      if (!step.trim()) return `empty step in path "${inner}"`;
    }
    pos = end + 2;
  }
}

/** Fields in a node config that hold templates, by node type. */
export const TEMPLATE_FIELDS: { [type: string]: string[] } = {
  template: ["template"],
  sendtext: ["text"],
  sendbuttons: ["text", "buttons.*.title", "buttons.*.payload"],
  sendextra: ["media"],
  setslots: ["assignments.*.value"],
  http_request: ["url"],
};
