/**
 * Schema-driven config forms. A node type's config_schema (served by
 * /admin/nodes) is turned into a field model the dialog renders directly:
 * primitives become inputs/selects/checkboxes, arrays of objects become
 * editable row lists (switch rules, buttons, slot assignments). New node
 * types therefore need no dedicated dialog code.
 */

import { RawNumber, Tree, cloneTree } from "./json.js";
import { NodeSpec } from "./model.js";
import { checkSchema } from "./validate.js";
import { TEMPLATE_FIELDS, templateSyntaxError } from "./template.js";

export type FieldKind = "text" | "template" | "number" | "boolean" | "select" | "rows";

export interface FieldModel {
  name: string;
  kind: FieldKind;
  required: boolean;
  options?: string[];           // select
  nullable?: boolean;           // value may be null (setslots clear marker)
  columns?: FieldModel[];       // rows
  defaultValue?: Tree;
}

function isObject(tree: Tree): tree is { [key: string]: Tree } {
  return tree !== null && typeof tree === "object" && !Array.isArray(tree) &&
    !(tree instanceof RawNumber);
}

function isTemplateField(type: string, path: string): boolean {
  return (TEMPLATE_FIELDS[type] ?? []).includes(path);
}

export function buildFormModel(spec: NodeSpec): FieldModel[] {
  const schema = spec.config_schema;
  if (!isObject(schema) || !isObject(schema["properties"])) return [];
  const required = new Set(
    Array.isArray(schema["required"])
      ? schema["required"].filter((k): k is string => typeof k === "string")
      : []);
  const fields: FieldModel[] = [];
  for (const [name, sub] of Object.entries(schema["properties"])) {
    fields.push(buildField(spec.type_name, name, sub, required.has(name), name));
  }
  return fields;
}

function buildField(type: string, name: string, schema: Tree,
                    required: boolean, path: string): FieldModel {
  const base: FieldModel = { name, kind: "text", required };
  if (!isObject(schema)) return base;
  if ("default" in schema) base.defaultValue = schema["default"];

  const declared = schema["type"];
  const types = Array.isArray(declared) ? declared : [declared];
  const nullable = types.includes("null");

  if (Array.isArray(schema["enum"])) {
    return { ...base, kind: "select",
             options: schema["enum"].filter((v): v is string => typeof v === "string") };
  }
  if (types.includes("boolean")) return { ...base, kind: "boolean" };
  if (types.includes("integer") || types.includes("number")) {
    return { ...base, kind: "number" };
  }
  if (types.includes("array") && isObject(schema["items"]) &&
      isObject(schema["items"]["properties"])) {
    const itemSchema = schema["items"];
    const itemRequired = new Set(
      Array.isArray(itemSchema["required"])
        ? itemSchema["required"].filter((k): k is string => typeof k === "string")
        : []);
    const columns = Object.entries(itemSchema["properties"] as { [k: string]: Tree })
      .map(([col, colSchema]) =>
        buildField(type, col, colSchema, itemRequired.has(col), `${path}.*.${col}`));
    return { ...base, kind: "rows", columns };
  }
  const kind: FieldKind = isTemplateField(type, path) ? "template" : "text";
  return { ...base, kind, nullable };
}

export interface FormState {
  config: { [key: string]: Tree };
  spec: NodeSpec;
}

export function newFormState(spec: NodeSpec, config: Tree): FormState {
  const copy = cloneTree(config);
  return { spec, config: isObject(copy) ? copy : {} };
}

/** All problems that must be fixed before OK is enabled. */
export function formProblems(state: FormState): string[] {
  const problems = checkSchema(state.config, state.spec.config_schema, "config");
  for (const fieldPath of TEMPLATE_FIELDS[state.spec.type_name] ?? []) {
    for (const [where, value] of walk(state.config, fieldPath.split("."))) {
      if (typeof value !== "string") continue;
      const error = templateSyntaxError(value);
      if (error) problems.push(`${where}: ${error}`);
    }
  }
  if (state.spec.type_name === "switch") {
    const rules = state.config["rules"];
    if (Array.isArray(rules) && rules.length === 0 && state.config["otherwise"] !== true) {
      problems.push("switch needs at least one rule or otherwise=true");
    }
  }
  return problems;
}

function* walk(tree: Tree, steps: string[], prefix = "config"): Iterable<[string, Tree]> {
  if (steps.length === 0) {
    yield [prefix, tree];
    return;
  }
  const [head, ...rest] = steps;
  if (head === "*") {
    if (Array.isArray(tree)) {
      for (let i = 0; i < tree.length; i++) yield* walk(tree[i], rest, `${prefix}.${i}`);
    }
    return;
  }
  if (isObject(tree) && head in tree) {
    yield* walk(tree[head], rest, `${prefix}.${head}`);
  }
}

export function emptyRow(field: FieldModel): { [key: string]: Tree } {
  const row: { [key: string]: Tree } = {};
  for (const column of field.columns ?? []) {
    if (column.kind === "select" && column.options?.length) {
      row[column.name] = column.options[0];
    } else if (column.kind === "boolean") {
      row[column.name] = false;
    } else if (column.kind === "number") {
      row[column.name] = 0;
    } else if (column.required) {
      row[column.name] = "";
    }
  }
  return row;
}
