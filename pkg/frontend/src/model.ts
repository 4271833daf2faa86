/**
 * Client-side mirror of the flow document format ("flowfill/1") and the
 * admin API payload shapes.
 */

import { RawNumber, Tree, canonicalize, cloneTree, parseTree } from "./json.js";

export const SCHEMA_VERSION = "flowfill/1";

export interface NodeInstance {
  id: string;
  type: string;
  label?: string;
  config: Tree;
  wires: string[][];
}

export interface FlowDocument {
  name: string;
  metadata: { [key: string]: Tree };
  nodes: NodeInstance[];
}

export interface NodeSpec {
  type_name: string;
  input_arity: number;
  output_arity: number | null;
  config_schema: Tree;
  category: string;
}

export interface Problem {
  code: string;
  node_id: string | null;
  detail: string;
}

export interface ValidationReport {
  errors: Problem[];
  warnings: Problem[];
}

export interface DebugEvent {
  seq: number;
  node_id: string;
  msg_id: string;
  level: "info" | "warning" | "error";
  body: Tree;
  timestamp: number;
  manual: boolean;
}

export interface ExecutionResultTree {
  terminal: Tree | null;
  branch_errors: { node_id: string; error: string }[];
  debug_events: DebugEvent[];
  duration_ms: number;
}

export class FlowFormatError extends Error {}

function asObject(tree: Tree, what: string): { [key: string]: Tree } {
  if (tree === null || typeof tree !== "object" || Array.isArray(tree) ||
      tree instanceof RawNumber) {
    throw new FlowFormatError(`${what} must be a JSON object`);
  }
  return tree;
}

export function parseFlow(text: string): FlowDocument {
  return flowFromTree(parseTree(text));
}

export function flowFromTree(tree: Tree): FlowDocument {
  const root = asObject(tree, "flow document");
  const version = root["version"] ?? SCHEMA_VERSION;
  if (version !== SCHEMA_VERSION) {
    throw new FlowFormatError(`unsupported schema version ${JSON.stringify(version)}`);
  }
  const name = root["name"] ?? "";
  if (typeof name !== "string") throw new FlowFormatError("name must be a string");
  const metadata = root["metadata"] !== undefined
    ? asObject(root["metadata"], "metadata") : {};
  const rawNodes = root["nodes"];
  if (!Array.isArray(rawNodes)) throw new FlowFormatError("nodes must be a list");
  const nodes = rawNodes.map((n, i) => nodeFromTree(n, i));
  return { name, metadata, nodes };
}

function nodeFromTree(tree: Tree, index: number): NodeInstance {
  const node = asObject(tree, `nodes.${index}`);
  const id = node["id"];
  const type = node["type"];
  if (typeof id !== "string" || !id) {
    throw new FlowFormatError(`nodes.${index}.id must be a non-empty string`);
  }
  if (typeof type !== "string" || !type) {
    throw new FlowFormatError(`nodes.${index}.type must be a non-empty string`);
  }
  const label = node["label"];
  if (label !== undefined && typeof label !== "string") {
    throw new FlowFormatError(`nodes.${index}.label must be a string`);
  }
  const rawWires = node["wires"] ?? [];
  if (!Array.isArray(rawWires)) {
    throw new FlowFormatError(`nodes.${index}.wires must be a list of ports`);
  }
  const wires = rawWires.map((port, pi) => {
    if (!Array.isArray(port)) {
      throw new FlowFormatError(`nodes.${index}.wires.${pi} must be a list`);
    }
    return port.map((target) => {
      if (typeof target !== "string") {
        throw new FlowFormatError(`nodes.${index}.wires.${pi} targets must be strings`);
      }
      return target;
    });
  });
  return {
    id,
    type,
    ...(typeof label === "string" ? { label } : {}),
    config: node["config"] ?? {},
    wires,
  };
}

export function flowToTree(doc: FlowDocument): Tree {
  return {
    version: SCHEMA_VERSION,
    name: doc.name,
    metadata: doc.metadata,
    nodes: doc.nodes.map((node) => ({
      id: node.id,
      type: node.type,
      config: node.config,
      wires: node.wires.map((port) => [...port]),
      ...(node.label !== undefined ? { label: node.label } : {}),
    })),
  };
}

/** Canonical bytes as the server produces them: sorted keys, 2-space
 * indent, trailing newline. */
export function serializeFlow(doc: FlowDocument): string {
  return canonicalize(flowToTree(doc), { sortKeys: true, indent: 2 }) + "\n";
}

export function cloneFlow(doc: FlowDocument): FlowDocument {
  return flowFromTree(cloneTree(flowToTree(doc)));
}
