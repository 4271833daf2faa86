/**
 * Deterministic auto-layout: left-to-right by topological depth, stacking
 * nodes of equal depth vertically in document order. Used when a node has
 * no stored "_pos".
 */

import { FlowDocument } from "./model.js";

export interface Position {
  x: number;
  y: number;
}

export const COLUMN_WIDTH = 190;
export const ROW_HEIGHT = 86;
export const MARGIN = 40;

export function autoLayout(doc: FlowDocument): Map<string, Position> {
  const ids = doc.nodes.map((n) => n.id);
  const known = new Set(ids);
  const indegree = new Map<string, number>(ids.map((id) => [id, 0]));
  const outgoing = new Map<string, string[]>(ids.map((id) => [id, []]));
  for (const node of doc.nodes) {
    for (const port of node.wires) {
      for (const target of port) {
        if (!known.has(target)) continue;
        outgoing.get(node.id)!.push(target);
        indegree.set(target, (indegree.get(target) ?? 0) + 1);
      }
    }
  }

  const depth = new Map<string, number>();
  const queue = ids.filter((id) => indegree.get(id) === 0);
  for (const id of queue) depth.set(id, 0);
  while (queue.length) {
    const id = queue.shift()!;
    for (const target of outgoing.get(id) ?? []) {
      const candidate = (depth.get(id) ?? 0) + 1;
      if (candidate > (depth.get(target) ?? 0)) depth.set(target, candidate);
      indegree.set(target, indegree.get(target)! - 1);
      if (indegree.get(target) === 0) queue.push(target);
    }
  }

  const rows = new Map<number, number>();
  const positions = new Map<string, Position>();
  for (const node of doc.nodes) {
    const d = depth.get(node.id) ?? 0; // cycles fall back to depth 0
    const row = rows.get(d) ?? 0;
    rows.set(d, row + 1);
    positions.set(node.id, {
      x: MARGIN + d * COLUMN_WIDTH,
      y: MARGIN + row * ROW_HEIGHT,
    });
  }
  return positions;
}
