"""Declarative flow documents: parsing, validation, and static queries.

A flow file is UTF-8 JSON with schema version "flowfill/1". Parsing is
purely structural; every semantic rule (unique ids, acyclic wiring, config
shapes, endpoint uniqueness) lives in validate_flow so problems surface as
data instead of exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Protocol

from . import jsontree

SCHEMA_VERSION = "flowfill/1"


class MalformedBody(ValueError):
    """Flow file bytes are not valid JSON."""


class SchemaViolation(ValueError):
    """Flow file JSON does not have the document shape; ``path`` locates it."""

    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


class ErrorCode(str, Enum):
    UNKNOWN_TYPE = "unknown_type"
    DUPLICATE_ID = "duplicate_id"
    DANGLING_WIRE = "dangling_wire"
    CYCLE = "cycle"
    ARITY_MISMATCH = "arity_mismatch"
    BAD_CONFIG = "bad_config"
    ENDPOINT_CONFLICT = "endpoint_conflict"


class WarningCode(str, Enum):
    UNREACHABLE = "unreachable"


# Validation output ordering follows node file order, then this code order.
_CODE_ORDER = {code: i for i, code in enumerate(ErrorCode)}


@dataclass(frozen=True)
class NodeInstance:
    id: str
    type: str
    config: Any = field(default_factory=dict)
    wires: tuple[tuple[str, ...], ...] = ()
    label: str | None = None

    def to_tree(self) -> dict:
        tree: dict[str, Any] = {
            "id": self.id,
            "type": self.type,
            "config": self.config,
            "wires": [list(port) for port in self.wires],
        }
        if self.label is not None:
            tree["label"] = self.label
        return tree


@dataclass(frozen=True)
class FlowDocument:
    name: str = ""
    nodes: tuple[NodeInstance, ...] = ()
    metadata: dict[str, Any] = field(default_factory=dict)

    def node_by_id(self, node_id: str) -> NodeInstance | None:
        for node in self.nodes:
            if node.id == node_id:
                return node
        return None

    def to_tree(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "name": self.name,
            "metadata": self.metadata,
            "nodes": [n.to_tree() for n in self.nodes],
        }


@dataclass(frozen=True)
class Problem:
    code: ErrorCode | WarningCode
    node_id: str | None
    detail: str

    def to_tree(self) -> dict:
        return {"code": self.code.value, "node_id": self.node_id, "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Problem, ...] = ()
    warnings: tuple[Problem, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [p.code.value for p in self.errors]

    def to_tree(self) -> dict:
        return {
            "errors": [p.to_tree() for p in self.errors],
            "warnings": [p.to_tree() for p in self.warnings],
        }

    def summary(self) -> str:
        if self.ok and not self.warnings:
            return "flow is valid"
        lines = []
        for p in self.errors:
            where = f" [{p.node_id}]" if p.node_id else ""
            lines.append(f"error {p.code.value}{where}: {p.detail}")
        for p in self.warnings:
            where = f" [{p.node_id}]" if p.node_id else ""
            lines.append(f"warning {p.code.value}{where}: {p.detail}")
        return "\n".join(lines)


class NodeTypeInfo(Protocol):
    """What validation needs to know about a registered node type."""

    type_name: str
    input_arity: int

    def validate_config(self, config, flow_vars: dict) -> list[str]: ...

    def output_arity_for(self, config) -> int | None: ...


class RegistryInfo(Protocol):
    def get(self, type_name: str) -> NodeTypeInfo | None: ...


def parse_flow(body: bytes | str) -> FlowDocument:
    """Structural parse of a flow file; semantics are validate_flow's job."""
    try:
        tree = jsontree.loads(body)
    except jsontree.MalformedJSON as exc:
        raise MalformedBody(str(exc)) from None
    return flow_from_tree(tree)


def flow_from_tree(tree) -> FlowDocument:
    if not isinstance(tree, dict):
        raise SchemaViolation("$", "flow document must be a JSON object")
    version = tree.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaViolation("version", f"unsupported schema version {version!r}")
    name = tree.get("name", "")
    if not isinstance(name, str):
        raise SchemaViolation("name", "must be a string")
    metadata = tree.get("metadata", {})
    if not isinstance(metadata, dict):
        raise SchemaViolation("metadata", "must be an object")
    raw_nodes = tree.get("nodes")
    if not isinstance(raw_nodes, list):
        raise SchemaViolation("nodes", "must be a list")
    nodes = [_node_from_tree(n, f"nodes.{i}") for i, n in enumerate(raw_nodes)]
    return FlowDocument(name=name, nodes=tuple(nodes), metadata=metadata)


def _node_from_tree(tree, path: str) -> NodeInstance:
    if not isinstance(tree, dict):
        raise SchemaViolation(path, "node must be an object")
    node_id = tree.get("id")
    if not isinstance(node_id, str) or not node_id:
        raise SchemaViolation(f"{path}.id", "must be a non-empty string")
    type_name = tree.get("type")
    if not isinstance(type_name, str) or not type_name:
        raise SchemaViolation(f"{path}.type", "must be a non-empty string")
    label = tree.get("label")
    if label is not None and not isinstance(label, str):
        raise SchemaViolation(f"{path}.label", "must be a string")
    config = tree.get("config", {})
    raw_wires = tree.get("wires", [])
    if not isinstance(raw_wires, list):
        raise SchemaViolation(f"{path}.wires", "must be a list of ports")
    wires = []
    for pi, port in enumerate(raw_wires):
        if not isinstance(port, list):
            raise SchemaViolation(f"{path}.wires.{pi}", "port must be a list of node ids")
        for ti, target in enumerate(port):
            if not isinstance(target, str):
                raise SchemaViolation(f"{path}.wires.{pi}.{ti}", "wire target must be a string")
        wires.append(tuple(port))
    return NodeInstance(id=node_id, type=type_name, config=config, wires=tuple(wires), label=label)


def serialize_flow(doc: FlowDocument) -> bytes:
    """Canonical bytes: sorted keys, 2-space indent, trailing newline."""
    return jsontree.dump_bytes(doc.to_tree(), sort_keys=True, indent=2)


def validate_flow(doc: FlowDocument, registry: RegistryInfo) -> ValidationReport:
    """Report every invariant violation; an empty errors list means deployable."""
    problems: list[tuple[int, Problem]] = []
    order = {node.id: i for i, node in enumerate(doc.nodes)}

    flow_vars = doc.metadata.get("vars", {})
    if not isinstance(flow_vars, dict):
        problems.append((-1, Problem(ErrorCode.BAD_CONFIG, None, "metadata.vars must be an object")))
        flow_vars = {}

    seen: set[str] = set()
    endpoint_owners: dict[tuple[str, str], str] = {}
    known_ids = {node.id for node in doc.nodes}

    for i, node in enumerate(doc.nodes):
        if node.id in seen:
            problems.append((i, Problem(ErrorCode.DUPLICATE_ID, node.id, f"node id {node.id!r} appears more than once")))
        seen.add(node.id)

        node_type = registry.get(node.type)
        if node_type is None:
            problems.append((i, Problem(ErrorCode.UNKNOWN_TYPE, node.id, f"no node type {node.type!r} in the registry")))
        else:
            for detail in node_type.validate_config(node.config, flow_vars):
                problems.append((i, Problem(ErrorCode.BAD_CONFIG, node.id, detail)))
            arity = node_type.output_arity_for(node.config)
            if arity is not None and len(node.wires) != arity:
                problems.append((i, Problem(
                    ErrorCode.ARITY_MISMATCH, node.id,
                    f"{node.type} declares {arity} output port(s) but has {len(node.wires)}",
                )))
            if node.type == "http_in" and isinstance(node.config, dict):
                method = node.config.get("method")
                path = node.config.get("path")
                if isinstance(method, str) and isinstance(path, str):
                    key = (method.upper(), path)
                    owner = endpoint_owners.get(key)
                    if owner is not None:
                        problems.append((i, Problem(
                            ErrorCode.ENDPOINT_CONFLICT, node.id,
                            f"endpoint {key[0]} {key[1]} already served by node {owner!r}",
                        )))
                    else:
                        endpoint_owners[key] = node.id

        for port in node.wires:
            for target in port:
                if target not in known_ids:
                    problems.append((i, Problem(
                        ErrorCode.DANGLING_WIRE, node.id,
                        f"wire targets unknown node {target!r}",
                    )))

    cycle_nodes = _find_cycle(doc)
    if cycle_nodes:
        first = min(cycle_nodes, key=lambda nid: order[nid])
        path_text = " -> ".join(sorted(cycle_nodes, key=lambda nid: order[nid]))
        problems.append((order[first], Problem(
            ErrorCode.CYCLE, first, f"wiring contains a cycle through {path_text}",
        )))

    problems.sort(key=lambda item: (item[0], _CODE_ORDER[item[1].code]))
    errors = tuple(p for _, p in problems)

    warnings = tuple(
        Problem(WarningCode.UNREACHABLE, node.id, "node is not reachable from any http_in endpoint")
        for node in _unreachable_nodes(doc)
    )
    return ValidationReport(errors=errors, warnings=warnings)


def _edges(doc: FlowDocument) -> Iterable[tuple[str, str]]:
    known = {node.id for node in doc.nodes}
    for node in doc.nodes:
        for port in node.wires:
            for target in port:
                if target in known:
                    yield node.id, target


def _find_cycle(doc: FlowDocument) -> set[str]:
    """Node ids on at least one wiring cycle (empty set when acyclic)."""
    adjacency: dict[str, list[str]] = {node.id: [] for node in doc.nodes}
    for src, dst in _edges(doc):
        adjacency[src].append(dst)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {nid: WHITE for nid in adjacency}
    on_cycle: set[str] = set()

    def visit(nid: str, stack: list[str]) -> None:
        color[nid] = GRAY
        stack.append(nid)
        for nxt in adjacency[nid]:
            if color[nxt] == GRAY:
                on_cycle.update(stack[stack.index(nxt):])
            elif color[nxt] == WHITE:
                visit(nxt, stack)
        stack.pop()
        color[nid] = BLACK

    for nid in adjacency:
        if color[nid] == WHITE:
            visit(nid, [])
    return on_cycle


def _unreachable_nodes(doc: FlowDocument) -> list[NodeInstance]:
    entries = [node.id for node in doc.nodes if node.type == "http_in"]
    if not entries:
        return []
    adjacency: dict[str, list[str]] = {node.id: [] for node in doc.nodes}
    for src, dst in _edges(doc):
        adjacency[src].append(dst)
    reached: set[str] = set()
    frontier = list(entries)
    while frontier:
        nid = frontier.pop()
        if nid in reached:
            continue
        reached.add(nid)
        frontier.extend(adjacency.get(nid, ()))
    return [node for node in doc.nodes if node.id not in reached]


def list_declared_actions(doc: FlowDocument) -> list[str]:
    """Actions this flow claims to handle.

    An explicit metadata.actions list wins; otherwise the equals-rule values
    of switch nodes testing the "action" property, in first-appearance order.
    """
    override = doc.metadata.get("actions")
    if override is not None:
        return [str(a) for a in override]
    actions: list[str] = []
    for node in doc.nodes:
        if node.type != "switch" or not isinstance(node.config, dict):
            continue
        if node.config.get("property") != "action":
            continue
        for rule in node.config.get("rules", []):
            if not isinstance(rule, dict) or rule.get("operator") != "equals":
                continue
            value = rule.get("value")
            if isinstance(value, str) and value not in actions:
                actions.append(value)
    return actions
