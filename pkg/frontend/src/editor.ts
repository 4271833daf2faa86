/**
 * Editor state: the client-side document mirror, selection, dirty tracking,
 * and canvas positions (persisted inside each node's config under "_pos").
 *
 * Loading never rewrites the document — a load-then-serialize round trip is
 * byte-identical to what the server sent. Canvas coordinates are only
 * written into configs when the user actually moves a node.
 */

import { RawNumber, Tree, cloneTree, treesEqual } from "./json.js";
import { Position, autoLayout } from "./layout.js";
import {
  FlowDocument,
  NodeInstance,
  NodeSpec,
  Problem,
  cloneFlow,
  parseFlow,
  serializeFlow,
} from "./model.js";
import { outputArity, validateDocument } from "./validate.js";

function isObject(tree: Tree): tree is { [key: string]: Tree } {
  return tree !== null && typeof tree === "object" && !Array.isArray(tree) &&
    !(tree instanceof RawNumber);
}

function numberOf(tree: Tree): number | null {
  if (typeof tree === "number") return tree;
  if (tree instanceof RawNumber) return tree.valueOf();
  return null;
}

export class Editor {
  doc: FlowDocument = { name: "", metadata: {}, nodes: [] };
  specs = new Map<string, NodeSpec>();
  selection: string | null = null;
  dirty = false;
  deployedVersion = 0;
  private fallbackPositions = new Map<string, Position>();

  loadDocument(text: string): void {
    this.doc = parseFlow(text);
    this.selection = null;
    this.dirty = false;
    this.fallbackPositions = autoLayout(this.doc);
  }

  loadSpecs(specs: NodeSpec[]): void {
    this.specs = new Map(specs.map((s) => [s.type_name, s]));
  }

  serialize(): string {
    return serializeFlow(this.doc);
  }

  validate(): Problem[] {
    return validateDocument(this.doc, this.specs);
  }

  get canDeploy(): boolean {
    return this.validate().length === 0;
  }

  node(id: string): NodeInstance | undefined {
    return this.doc.nodes.find((n) => n.id === id);
  }

  /** Stored position, or the deterministic auto-layout slot. */
  position(id: string): Position {
    const node = this.node(id);
    if (node && isObject(node.config) && isObject(node.config["_pos"])) {
      const x = numberOf(node.config["_pos"]["x"]);
      const y = numberOf(node.config["_pos"]["y"]);
      if (x !== null && y !== null) return { x, y };
    }
    return this.fallbackPositions.get(id) ?? { x: 40, y: 40 };
  }

  select(id: string | null): void {
    this.selection = id;
  }

  moveNode(id: string, x: number, y: number): void {
    const node = this.node(id);
    if (!node) return;
    if (!isObject(node.config)) node.config = {};
    (node.config as { [key: string]: Tree })["_pos"] = { x, y };
    this.dirty = true;
  }

  updateNodeConfig(id: string, config: Tree): boolean {
    const node = this.node(id);
    if (!node) return false;
    if (treesEqual(node.config, config)) return false;
    const pos = isObject(node.config) ? node.config["_pos"] : undefined;
    node.config = cloneTree(config);
    if (pos !== undefined && isObject(node.config) && !("_pos" in node.config)) {
      node.config["_pos"] = pos;
    }
    this.dirty = true;
    return true;
  }

  updateNodeLabel(id: string, label: string): void {
    const node = this.node(id);
    if (!node) return;
    if (label) {
      node.label = label;
    } else {
      delete node.label;
    }
    this.dirty = true;
  }

  addNode(type: string, at: Position): NodeInstance {
    const spec = this.specs.get(type);
    const arity = spec ? outputArity(type, {}, spec) ?? 1 : 1;
    let n = 1;
    while (this.node(`${type}_${n}`)) n++;
    const node: NodeInstance = {
      id: `${type}_${n}`,
      type,
      config: { _pos: { x: at.x, y: at.y } },
      wires: Array.from({ length: arity }, () => []),
    };
    this.doc.nodes.push(node);
    this.dirty = true;
    return node;
  }

  removeNode(id: string): void {
    this.doc.nodes = this.doc.nodes.filter((n) => n.id !== id);
    for (const node of this.doc.nodes) {
      node.wires = node.wires.map((port) => port.filter((t) => t !== id));
    }
    if (this.selection === id) this.selection = null;
    this.dirty = true;
  }

  addWire(from: string, port: number, to: string): void {
    const node = this.node(from);
    if (!node) return;
    while (node.wires.length <= port) node.wires.push([]);
    if (!node.wires[port].includes(to)) {
      node.wires[port].push(to);
      this.dirty = true;
    }
  }

  removeWire(from: string, port: number, to: string): void {
    const node = this.node(from);
    if (!node || port >= node.wires.length) return;
    const before = node.wires[port].length;
    node.wires[port] = node.wires[port].filter((t) => t !== to);
    if (node.wires[port].length !== before) this.dirty = true;
  }

  /** Resize a switch node's ports after a rules/otherwise edit. */
  syncOutputPorts(id: string): void {
    const node = this.node(id);
    const spec = node && this.specs.get(node.type);
    if (!node || !spec) return;
    const arity = outputArity(node.type, node.config, spec);
    if (arity === null) return;
    while (node.wires.length < arity) node.wires.push([]);
    if (node.wires.length > arity) node.wires = node.wires.slice(0, arity);
  }

  markDeployed(version: number): void {
    this.deployedVersion = version;
    this.dirty = false;
  }

  snapshot(): FlowDocument {
    return cloneFlow(this.doc);
  }
}
