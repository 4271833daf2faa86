"""Flow compilation and execution.

Compilation eagerly validates a document against the registry, parses every
node config (templates included), and indexes the http_in entry points.
Execution propagates messages along wires from a FIFO frontier: outputs
enqueue in port order then wire order, extra wire targets on one port get
deep clones, and a branch failure kills only that branch. Deployment swaps
the compiled flow atomically; executions already running finish on the
version they started with, up to a drain timeout.
"""

from __future__ import annotations

import itertools
import logging
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable

from . import flow_model
from .flow_model import FlowDocument, ValidationReport
from .nodes import (
    HttpReply,
    MessageObject,
    NodeType,
    Registry,
    default_http_send,
    standard_registry,
)
from .protocol import ActionRequest, ActionResponse, action_response_to_tree

log = logging.getLogger("flowfill.engine")

DEFAULT_DRAIN_TIMEOUT_MS = 30_000

Entry = tuple[str, str]  # (method, path)


class CompileError(Exception):
    """Document failed validation; carries the full report."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(report.summary())


class UnknownEntry(KeyError):
    def __init__(self, entry: Entry):
        self.entry = entry
        super().__init__(f"no http_in endpoint for {entry[0]} {entry[1]}")


class ExecutionCancelled(Exception):
    """Raised internally when a drained version passes its timeout."""


@dataclass(frozen=True)
class DebugEvent:
    seq: int
    node_id: str
    msg_id: str
    level: str
    body: Any
    timestamp: int  # wall-clock milliseconds
    manual: bool = False

    def to_tree(self) -> dict:
        return {
            "seq": self.seq,
            "node_id": self.node_id,
            "msg_id": self.msg_id,
            "level": self.level,
            "body": self.body,
            "timestamp": self.timestamp,
            "manual": self.manual,
        }


@dataclass(frozen=True)
class BranchFailure:
    node_id: str
    error: str

    def to_tree(self) -> dict:
        return {"node_id": self.node_id, "error": self.error}


@dataclass(frozen=True)
class ExecutionResult:
    terminal: ActionResponse | None
    branch_errors: tuple[BranchFailure, ...]
    debug_events: tuple[DebugEvent, ...]
    duration_ms: float

    def to_tree(self) -> dict:
        return {
            "terminal": action_response_to_tree(self.terminal) if self.terminal else None,
            "branch_errors": [f.to_tree() for f in self.branch_errors],
            "debug_events": [e.to_tree() for e in self.debug_events],
            "duration_ms": self.duration_ms,
        }


@dataclass
class CompiledNode:
    node_id: str
    node_type: NodeType
    cfg: Any
    wires: tuple[tuple[str, ...], ...]


@dataclass
class CompiledFlow:
    version_id: int
    entry_points: dict[Entry, str]
    topo_order: tuple[str, ...]
    nodes: dict[str, CompiledNode]
    document: FlowDocument


def compile_flow(doc: FlowDocument, registry: Registry) -> CompiledFlow:
    """Validate and compile a document; raises CompileError when invalid."""
    report = flow_model.validate_flow(doc, registry)
    if not report.ok:
        raise CompileError(report)
    flow_vars = doc.metadata.get("vars", {})
    compiled: dict[str, CompiledNode] = {}
    entry_points: dict[Entry, str] = {}
    for node in doc.nodes:
        node_type = registry.get(node.type)
        cfg = node_type.compile_config(node.config, flow_vars)
        compiled[node.id] = CompiledNode(
            node_id=node.id, node_type=node_type, cfg=cfg, wires=node.wires,
        )
        if node.type == "http_in":
            entry_points[(cfg["method"].upper(), cfg["path"])] = node.id
    return CompiledFlow(
        version_id=0,
        entry_points=entry_points,
        topo_order=_topo_order(doc),
        nodes=compiled,
        document=doc,
    )


def _topo_order(doc: FlowDocument) -> tuple[str, ...]:
    indegree = {node.id: 0 for node in doc.nodes}
    adjacency: dict[str, list[str]] = {node.id: [] for node in doc.nodes}
    for node in doc.nodes:
        for port in node.wires:
            for target in port:
                adjacency[node.id].append(target)
                indegree[target] += 1
    ready = deque(node.id for node in doc.nodes if indegree[node.id] == 0)
    order: list[str] = []
    while ready:
        nid = ready.popleft()
        order.append(nid)
        for target in adjacency[nid]:
            indegree[target] -= 1
            if indegree[target] == 0:
                ready.append(target)
    return tuple(order)


class DebugSubscription:
    """One consumer's view of the debug broadcast."""

    def __init__(self, bus: DebugBus, maxsize: int):
        self._bus = bus
        self._queue: queue.Queue = queue.Queue(maxsize=maxsize)
        self.closed = False

    def get(self, timeout: float | None = None) -> DebugEvent | None:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        self._bus.unsubscribe(self)


class DebugBus:
    """Multi-consumer broadcast; a consumer that falls behind is dropped."""

    def __init__(self, maxsize: int = 1024):
        self._maxsize = maxsize
        self._subscribers: list[DebugSubscription] = []
        self._lock = threading.Lock()

    def subscribe(self) -> DebugSubscription:
        sub = DebugSubscription(self, self._maxsize)
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: DebugSubscription) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)
            sub.closed = True

    def publish(self, event: DebugEvent) -> None:
        with self._lock:
            stale = []
            for sub in self._subscribers:
                try:
                    sub._queue.put_nowait(event)
                except queue.Full:
                    stale.append(sub)
            for sub in stale:
                self._subscribers.remove(sub)
                sub.closed = True


class _ExecutionContext:
    """NodeContext implementation for one execution."""

    def __init__(self, engine: Engine, request: ActionRequest, manual: bool):
        self.request = request
        self.strict_templates = engine.strict_templates
        self.manual = manual
        self.events: list[DebugEvent] = []
        self.terminal: ActionResponse | None = None
        self.branch_errors: list[BranchFailure] = []
        self.node_id = ""
        self.msg_id = ""
        self._engine = engine

    def emit_debug(self, level: str, body) -> None:
        event = self._engine._make_event(
            node_id=self.node_id, msg_id=self.msg_id,
            level=level, body=body, manual=self.manual,
        )
        self.events.append(event)
        self._engine._bus.publish(event)

    def record_terminal(self, msg: MessageObject) -> None:
        if self.terminal is None:
            self.terminal = msg.finished
        else:
            self.emit_debug("warning", "additional terminal response discarded (first wins)")

    def http_send(self, method, url, headers, body, timeout_ms) -> HttpReply:
        return self._engine._http_send(method, url, headers, body, timeout_ms)

    def fail_branch(self, node_id: str, error: Exception) -> None:
        text = f"{type(error).__name__}: {error}"
        self.branch_errors.append(BranchFailure(node_id=node_id, error=text))
        self.emit_debug("error", text)


class Engine:
    """Holds the deployed flow and runs executions against it."""

    def __init__(
        self,
        registry: Registry | None = None,
        *,
        strict_templates: bool = False,
        drain_timeout_ms: int = DEFAULT_DRAIN_TIMEOUT_MS,
        http_send: Callable[..., HttpReply] | None = None,
    ):
        self.registry = registry if registry is not None else standard_registry()
        self.strict_templates = strict_templates
        self.drain_timeout_ms = drain_timeout_ms
        self._http_send = http_send or default_http_send
        self._bus = DebugBus()
        self._seq = itertools.count(1)
        self._seq_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._drained = threading.Condition(self._state_lock)
        self._current: CompiledFlow | None = None
        self._version = 0
        self._inflight: dict[int, int] = {}
        self._superseded_at: dict[int, float] = {}

    # -- deployment -----------------------------------------------------------

    def deploy(self, doc: FlowDocument) -> int:
        """Atomically activate a new flow version; the old one keeps serving
        its in-flight executions. Raises CompileError, keeping the previous
        version live."""
        compiled = compile_flow(doc, self.registry)
        with self._state_lock:
            self._version += 1
            compiled.version_id = self._version
            if self._current is not None:
                self._superseded_at[self._current.version_id] = time.monotonic()
            self._current = compiled
            log.info("deployed flow %r as version %d", doc.name, self._version)
            return self._version

    def current_version(self) -> int:
        with self._state_lock:
            return self._current.version_id if self._current else 0

    def current_document(self) -> FlowDocument | None:
        with self._state_lock:
            return self._current.document if self._current else None

    def current_flow(self) -> CompiledFlow | None:
        with self._state_lock:
            return self._current

    def entry_points(self) -> dict[Entry, str]:
        with self._state_lock:
            return dict(self._current.entry_points) if self._current else {}

    # -- execution ------------------------------------------------------------

    def execute(self, entry: Entry, request: ActionRequest) -> ExecutionResult:
        return self._run(entry, request, manual=False)

    def inject(self, entry: Entry, request: ActionRequest) -> ExecutionResult:
        """Manual trigger with execute semantics; debug events are flagged."""
        return self._run(entry, request, manual=True)

    def _run(self, entry: Entry, request: ActionRequest, manual: bool) -> ExecutionResult:
        with self._state_lock:
            flow = self._current
            if flow is None or entry not in flow.entry_points:
                raise UnknownEntry(entry)
            version = flow.version_id
            self._inflight[version] = self._inflight.get(version, 0) + 1
        try:
            return self._propagate(flow, entry, request, manual)
        finally:
            with self._state_lock:
                self._inflight[version] -= 1
                if self._inflight[version] == 0:
                    del self._inflight[version]
                    self._superseded_at.pop(version, None)
                    self._drained.notify_all()

    def _propagate(self, flow: CompiledFlow, entry: Entry,
                   request: ActionRequest, manual: bool) -> ExecutionResult:
        started = time.monotonic()
        ctx = _ExecutionContext(self, request, manual)
        initial = MessageObject(payload=None, request=request.raw)
        frontier: deque[tuple[str, MessageObject]] = deque()
        frontier.append((flow.entry_points[entry], initial))

        while frontier:
            node_id, msg = frontier.popleft()
            if self._drain_expired(flow.version_id):
                ctx.node_id, ctx.msg_id = node_id, msg.msg_id
                ctx.fail_branch(node_id, ExecutionCancelled(
                    f"version {flow.version_id} cancelled after drain timeout"))
                break
            cnode = flow.nodes[node_id]
            ctx.node_id, ctx.msg_id = node_id, msg.msg_id
            try:
                outputs = cnode.node_type.run(cnode.cfg, msg, ctx)
            except Exception as exc:
                ctx.fail_branch(node_id, exc)
                continue
            for port, out_msg in outputs:
                targets = cnode.wires[port] if port < len(cnode.wires) else ()
                for i, target in enumerate(targets):
                    forwarded = out_msg if i == 0 else out_msg.clone()
                    frontier.append((target, forwarded))

        duration_ms = (time.monotonic() - started) * 1000.0
        return ExecutionResult(
            terminal=ctx.terminal,
            branch_errors=tuple(ctx.branch_errors),
            debug_events=tuple(ctx.events),
            duration_ms=duration_ms,
        )

    def _drain_expired(self, version_id: int) -> bool:
        with self._state_lock:
            superseded = self._superseded_at.get(version_id)
        if superseded is None:
            return False
        return (time.monotonic() - superseded) * 1000.0 > self.drain_timeout_ms

    def wait_drained(self, version_id: int, timeout_s: float) -> bool:
        """Block until no execution runs on the given version."""
        deadline = time.monotonic() + timeout_s
        with self._drained:
            while self._inflight.get(version_id, 0) > 0:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._drained.wait(timeout=remaining)
            return True

    def active_executions(self, version_id: int) -> int:
        with self._state_lock:
            return self._inflight.get(version_id, 0)

    # -- diagnostics ----------------------------------------------------------

    def subscribe_debug(self) -> DebugSubscription:
        return self._bus.subscribe()

    def _make_event(self, node_id: str, msg_id: str, level: str, body,
                    manual: bool) -> DebugEvent:
        with self._seq_lock:
            seq = next(self._seq)
        return DebugEvent(
            seq=seq,
            node_id=node_id,
            msg_id=msg_id,
            level=level,
            body=body,
            timestamp=int(time.time() * 1000),
            manual=manual,
        )
