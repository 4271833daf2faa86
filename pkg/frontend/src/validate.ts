/**
 * Client-side validation gating the Deploy button.
 *
 * Structural rules (unique ids, wire targets, acyclicity, arity, endpoint
 * uniqueness) mirror the server's; config shapes are checked against the
 * schemas fetched from /admin/nodes plus template syntax for template
 * fields. The server remains authoritative — a 422 report is still
 * rendered if it disagrees — but Deploy never fires while this fails.
 */

import { RawNumber, Tree } from "./json.js";
import { FlowDocument, NodeSpec, Problem } from "./model.js";
import { TEMPLATE_FIELDS, templateSyntaxError } from "./template.js";

export function validateDocument(doc: FlowDocument,
                                 specs: Map<string, NodeSpec>): Problem[] {
  const problems: Problem[] = [];
  const ids = new Set<string>();
  const endpoints = new Map<string, string>();

  for (const node of doc.nodes) {
    if (ids.has(node.id)) {
      problems.push({ code: "duplicate_id", node_id: node.id,
                      detail: `node id "${node.id}" appears more than once` });
    }
    ids.add(node.id);

    const spec = specs.get(node.type);
    if (!spec) {
      problems.push({ code: "unknown_type", node_id: node.id,
                      detail: `no node type "${node.type}"` });
      continue;
    }

    for (const detail of checkSchema(node.config, spec.config_schema, "config")) {
      problems.push({ code: "bad_config", node_id: node.id, detail });
    }
    for (const detail of checkTemplates(node.type, node.config)) {
      problems.push({ code: "bad_config", node_id: node.id, detail });
    }

    const arity = outputArity(node.type, node.config, spec);
    if (arity !== null && node.wires.length !== arity) {
      problems.push({
        code: "arity_mismatch", node_id: node.id,
        detail: `${node.type} declares ${arity} output port(s) but has ${node.wires.length}`,
      });
    }

    if (node.type === "switch" && isObject(node.config)) {
      const rules = node.config["rules"];
      if (Array.isArray(rules) && rules.length === 0 && node.config["otherwise"] !== true) {
        problems.push({ code: "bad_config", node_id: node.id,
                        detail: "switch needs at least one rule or otherwise=true" });
      }
    }

    if (node.type === "http_in" && isObject(node.config)) {
      const method = node.config["method"];
      const path = node.config["path"];
      if (typeof method === "string" && typeof path === "string") {
        const key = `${method.toUpperCase()} ${path}`;
        const owner = endpoints.get(key);
        if (owner) {
          problems.push({ code: "endpoint_conflict", node_id: node.id,
                          detail: `endpoint ${key} already served by node "${owner}"` });
        } else {
          endpoints.set(key, node.id);
        }
      }
    }
  }

  const known = new Set(doc.nodes.map((n) => n.id));
  for (const node of doc.nodes) {
    for (const port of node.wires) {
      for (const target of port) {
        if (!known.has(target)) {
          problems.push({ code: "dangling_wire", node_id: node.id,
                          detail: `wire targets unknown node "${target}"` });
        }
      }
    }
  }

  const cycleNode = findCycle(doc);
  if (cycleNode !== null) {
    problems.push({ code: "cycle", node_id: cycleNode,
                    detail: "wiring contains a cycle" });
  }
  return problems;
}

export function outputArity(type: string, config: Tree,
                            spec: NodeSpec): number | null {
  if (spec.output_arity !== null) return spec.output_arity;
  if (type === "switch" && isObject(config) && Array.isArray(config["rules"])) {
    return config["rules"].length + (config["otherwise"] === true ? 1 : 0);
  }
  return null;
}

function checkTemplates(type: string, config: Tree): string[] {
  const problems: string[] = [];
  for (const fieldPath of TEMPLATE_FIELDS[type] ?? []) {
    for (const [where, value] of collect(config, fieldPath.split("."))) {
      if (typeof value !== "string") continue;
      const error = templateSyntaxError(value);
      if (error) problems.push(`${where}: ${error}`);
    }
  }
  return problems;
}

function* collect(tree: Tree, steps: string[], prefix = ""): Iterable<[string, Tree]> {
  if (steps.length === 0) {
    yield [prefix || "config", tree];
    return;
  }
  const [head, ...rest] = steps;
  if (head === "*") {
    if (Array.isArray(tree)) {
      for (let i = 0; i < tree.length; i++) {
        yield* collect(tree[i], rest, `${prefix}.${i}`);
      }
    }
    return;
  }
  if (isObject(tree) && head in tree) {
    yield* collect(tree[head], rest, prefix ? `${prefix}.${head}` : head);
  }
}

function findCycle(doc: FlowDocument): string | null {
  const known = new Set(doc.nodes.map((n) => n.id));
  const adjacency = new Map<string, string[]>();
  for (const node of doc.nodes) {
    adjacency.set(node.id,
      node.wires.flat().filter((target) => known.has(target)));
  }
  const WHITE = 0, GRAY = 1, BLACK = 2;
  const color = new Map<string, number>();
  let found: string | null = null;

  const visit = (id: string): void => {
    color.set(id, GRAY);
    for (const next of adjacency.get(id) ?? []) {
      if (color.get(next) === GRAY) {
        if (found === null) found = next;
      } else if (!color.get(next)) {
        visit(next);
      }
    }
    color.set(id, BLACK);
  };

  for (const node of doc.nodes) {
    if (!color.get(node.id)) visit(node.id);
  }
  return found;
}

// --- minimal JSON-schema subset used by the node config schemas -------------

export function checkSchema(value: Tree, schema: Tree, where: string): string[] {
  const problems: string[] = [];
  checkInto(value, schema, where, problems);
  return problems;
}

function isObject(tree: Tree): tree is { [key: string]: Tree } {
  return tree !== null && typeof tree === "object" && !Array.isArray(tree) &&
    !(tree instanceof RawNumber);
}

function typeMatches(value: Tree, type: string): boolean {
  switch (type) {
    case "object": return isObject(value);
    case "array": return Array.isArray(value);
    case "string": return typeof value === "string";
    case "boolean": return typeof value === "boolean";
    case "null": return value === null;
    case "integer":
      return (typeof value === "number" && Number.isInteger(value)) ||
        (value instanceof RawNumber && Number.isInteger(value.valueOf()));
    case "number": return typeof value === "number" || value instanceof RawNumber;
    default: return true;
  }
}

function checkInto(value: Tree, schema: Tree, where: string, problems: string[]): void {
  if (!isObject(schema)) return;

  const type = schema["type"];
  if (typeof type === "string" && !typeMatches(value, type)) {
    problems.push(`${where} must be ${type}`);
    return;
  }
  if (Array.isArray(type) && !type.some((t) => typeof t === "string" && typeMatches(value, t))) {
    problems.push(`${where} must be one of ${type.join("/")}`);
    return;
  }

  const enumValues = schema["enum"];
  if (Array.isArray(enumValues) && !enumValues.some((v) => v === value)) {
    problems.push(`${where} must be one of ${enumValues.map((v) => JSON.stringify(v)).join(", ")}`);
  }

  if (typeof schema["minLength"] === "number" && typeof value === "string" &&
      value.length < schema["minLength"]) {
    problems.push(`${where} must not be empty`);
  }
  if (typeof schema["minimum"] === "number") {
    const num = typeof value === "number" ? value
      : value instanceof RawNumber ? value.valueOf() : null;
    if (num !== null && num < schema["minimum"]) {
      problems.push(`${where} must be >= ${schema["minimum"]}`);
    }
  }
  if (typeof schema["pattern"] === "string" && typeof value === "string" &&
      !new RegExp(schema["pattern"]).test(value)) {
    problems.push(`${where} does not match ${schema["pattern"]}`);
  }

  if (Array.isArray(value)) {
    if (typeof schema["minItems"] === "number" && value.length < schema["minItems"]) {
      problems.push(`${where} needs at least ${schema["minItems"]} item(s)`);
    }
    const items = schema["items"];
    if (items !== undefined) {
      value.forEach((item, i) => checkInto(item, items, `${where}.${i}`, problems));
    }
  }

  if (isObject(value)) {
    const required = schema["required"];
    if (Array.isArray(required)) {
      for (const key of required) {
        if (typeof key === "string" && !(key in value)) {
          problems.push(`${where}.${key} is required`);
        }
      }
    }
    const properties = isObject(schema["properties"]) ? schema["properties"] : {};
    for (const key of Object.keys(value)) {
      if (key in properties) {
        checkInto(value[key], properties[key], `${where}.${key}`, problems);
      } else if (key.startsWith("_")) {
        // reserved editor keys (e.g. _pos) are always allowed
      } else if (schema["additionalProperties"] === false) {
        problems.push(`${where}.${key} is not a recognized option`);
      } else if (isObject(schema["additionalProperties"])) {
        checkInto(value[key], schema["additionalProperties"], `${where}.${key}`, problems);
      }
    }
  }
}
