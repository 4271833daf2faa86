/**
 * Admin API client. Talks only to the server's /admin/* surface plus
 * /health; the debug stream is consumed with fetch streaming so the same
 * code runs in the browser and under vitest.
 */

import { Tree, parseTree } from "./json.js";
import {
  DebugEvent,
  ExecutionResultTree,
  NodeSpec,
  ValidationReport,
} from "./model.js";

export interface DeployOutcome {
  ok: boolean;
  version?: number;
  report?: ValidationReport;
  error?: string;
}

export interface HealthInfo {
  status: string;
  flow_version: number;
  uptime_ms: number;
}

export interface StreamHandle {
  close(): void;
}

export type StreamStatus = "connecting" | "open" | "retrying";

export class AdminClient {
  constructor(readonly baseUrl: string, readonly token?: string) {}

  private headers(extra: { [k: string]: string } = {}): { [k: string]: string } {
    return this.token ? { ...extra, "X-Admin-Token": this.token } : extra;
  }

  async health(): Promise<HealthInfo> {
    const resp = await fetch(`${this.baseUrl}/health`);
    return (await resp.json()) as HealthInfo;
  }

  /** Raw canonical bytes; parsing stays the caller's business so that
   * byte-level round-trip checks see exactly what the server sent. */
  async getFlowText(): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/admin/flow`, { headers: this.headers() });
    if (!resp.ok) throw new Error(`GET /admin/flow failed: ${resp.status}`);
    return await resp.text();
  }

  async getNodeSpecs(): Promise<NodeSpec[]> {
    const resp = await fetch(`${this.baseUrl}/admin/nodes`, { headers: this.headers() });
    if (!resp.ok) throw new Error(`GET /admin/nodes failed: ${resp.status}`);
    return (await resp.json()) as NodeSpec[];
  }

  async deploy(flowText: string): Promise<DeployOutcome> {
    let resp: Response;
    try {
      resp = await fetch(`${this.baseUrl}/admin/flow`, {
        method: "POST",
        headers: this.headers({ "Content-Type": "application/json" }),
        body: flowText,
      });
    } catch (exc) {
      return { ok: false, error: `network failure: ${exc}` };
    }
    if (resp.status === 200) {
      const body = (await resp.json()) as { version: number };
      return { ok: true, version: body.version };
    }
    if (resp.status === 422) {
      return { ok: false, report: (await resp.json()) as ValidationReport };
    }
    return { ok: false, error: `deploy failed: HTTP ${resp.status} ${await resp.text()}` };
  }

  async inject(entry: { method: string; path: string },
               request: Tree): Promise<ExecutionResultTree> {
    const resp = await fetch(`${this.baseUrl}/admin/inject`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ entry, request }),
    });
    if (!resp.ok) {
      const body = (await resp.json().catch(() => ({}))) as { error?: string };
      throw new Error(body.error ?? `inject failed: HTTP ${resp.status}`);
    }
    return (await resp.json()) as ExecutionResultTree;
  }

  /** Subscribe to /admin/debug; reconnects with exponential backoff until
   * closed. Events are delivered in arrival order. */
  subscribeDebug(
    onEvent: (event: DebugEvent) => void,
    onStatus: (status: StreamStatus) => void = () => {},
  ): StreamHandle {
    let closed = false;
    let controller: AbortController | null = null;
    let backoffMs = 500;

    const pump = async (): Promise<void> => {
      while (!closed) {
        controller = new AbortController();
        onStatus("connecting");
        try {
          const resp = await fetch(`${this.baseUrl}/admin/debug`, {
            headers: this.headers(),
            signal: controller.signal,
          });
          if (!resp.ok || !resp.body) throw new Error(`HTTP ${resp.status}`);
          onStatus("open");
          backoffMs = 500;
          const reader = resp.body.getReader();
          const decoder = new TextDecoder();
          let buffer = "";
          for (;;) {
            const { done, value } = await reader.read();
            if (done) break;
            buffer += decoder.decode(value, { stream: true });
            let split: number;
            while ((split = buffer.indexOf("\n\n")) >= 0) {
              const frame = buffer.slice(0, split);
              buffer = buffer.slice(split + 2);
              if (frame.startsWith(":")) continue;
              for (const line of frame.split("\n")) {
                if (line.startsWith("data: ")) {
                  onEvent(JSON.parse(line.slice(6)) as DebugEvent);
                }
              }
            }
          }
        } catch (exc) {
          if (closed) return;
        }
        if (closed) return;
        onStatus("retrying");
        await new Promise((resolve) => setTimeout(resolve, backoffMs));
        backoffMs = Math.min(backoffMs * 2, 10_000);
      }
    };

    void pump();
    return {
      close: () => {
        closed = true;
        controller?.abort();
      },
    };
  }
}

/** Build a webhook-shaped action request tree for the inject panel. */
export function buildInjectRequest(action: string,
                                   slots: { [name: string]: Tree }): Tree {
  return {
    next_action: action,
    sender_id: "editor",
    tracker: { slots },
  };
}

export function parseSlotInput(raw: string): Tree {
  const text = raw.trim();
  if (text === "null") return null;
  if (text === "true") return true;
  if (text === "false") return false;
  if (/^-?\d+(\.\d+)?$/.test(text)) return Number(text);
  if (text.startsWith("{") || text.startsWith("[") || text.startsWith('"')) {
    try {
      return parseTree(text);
    } catch {
      return raw;
    }
  }
  return raw;
}
