"""HTTP face: the action webhook plus auxiliary and admin services.

One threaded server carries everything: flow-defined webhook endpoints,
GET /health and GET /actions, and the admin surface (flow get/deploy, node
registry, SSE debug stream, manual inject) that the CLI and the flow editor
consume. Admin endpoints optionally require a shared secret
(FLOWFILL_ADMIN_TOKEN) via the X-Admin-Token header.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit

from . import flow_model, jsontree
from .engine import DEFAULT_DRAIN_TIMEOUT_MS, CompileError, Engine, UnknownEntry
from .protocol import (
    ProtocolError,
    parse_action_request,
    serialize_action_response,
    serialize_error,
)

log = logging.getLogger("flowfill.server")

ADMIN_TOKEN_ENV = "FLOWFILL_ADMIN_TOKEN"
ADMIN_TOKEN_HEADER = "X-Admin-Token"


class _Httpd(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128  # survive bursts of concurrent connections


@dataclass
class ServerConfig:
    bind_address: str = "127.0.0.1:5055"
    flow_path: str | None = None
    strict_templates: bool = False
    drain_timeout_ms: int = DEFAULT_DRAIN_TIMEOUT_MS
    log_level: str = "info"
    admin_token: str | None = None

    def host_port(self) -> tuple[str, int]:
        host, _, port_text = self.bind_address.rpartition(":")
        if not host or not port_text.isdigit():
            raise ValueError(f"bind address must be host:port, got {self.bind_address!r}")
        port = int(port_text)
        if not 0 <= port <= 65535:
            raise ValueError(f"port out of range: {port}")
        return host, port


class FlowfillServer:
    """Owns the engine and the listening socket."""

    def __init__(self, config: ServerConfig | None = None, engine: Engine | None = None):
        self.config = config or ServerConfig()
        self.engine = engine or Engine(
            strict_templates=self.config.strict_templates,
            drain_timeout_ms=self.config.drain_timeout_ms,
        )
        self.admin_token = self.config.admin_token or os.environ.get(ADMIN_TOKEN_ENV)
        self.started_at = time.monotonic()
        self.running = threading.Event()
        self._httpd: _Httpd | None = None
        self._thread: threading.Thread | None = None

    def load_initial_flow(self) -> flow_model.ValidationReport | None:
        """Deploy config.flow_path; returns the report when it fails validation."""
        if not self.config.flow_path:
            return None
        with open(self.config.flow_path, "rb") as fh:
            doc = flow_model.parse_flow(fh.read())
        try:
            self.engine.deploy(doc)
        except CompileError as exc:
            return exc.report
        return None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1] if self._httpd else 0

    @property
    def url(self) -> str:
        host, _ = self.config.host_port()
        return f"http://{host}:{self.port}"

    def start(self) -> None:
        host, port = self.config.host_port()
        handler = _make_handler(self)
        self._httpd = _Httpd((host, port), handler)
        self.started_at = time.monotonic()
        self.running.set()
        self._thread = threading.Thread(
            target=lambda: self._httpd.serve_forever(poll_interval=0.05),
            name="flowfill-http", daemon=True)
        self._thread.start()
        log.info("serving on %s:%d", host, self.port)

    def serve_forever(self) -> None:
        self.start()
        try:
            self._thread.join()
        except KeyboardInterrupt:
            self.stop()

    def stop(self) -> None:
        self.running.clear()
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def uptime_ms(self) -> int:
        return int((time.monotonic() - self.started_at) * 1000)


def _make_handler(app: FlowfillServer):
    class Handler(_FlowfillHandler):
        pass

    Handler.app = app
    return Handler


class _FlowfillHandler(BaseHTTPRequestHandler):
    app: FlowfillServer
    protocol_version = "HTTP/1.1"

    # -- plumbing --------------------------------------------------------

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _send(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_tree(self, status: int, tree) -> None:
        self._send(status, jsontree.dump_bytes(tree))

    def _admin_allowed(self) -> bool:
        token = self.app.admin_token
        if token is None:
            return True
        if self.headers.get(ADMIN_TOKEN_HEADER) == token:
            return True
        self._send_tree(401, {"error": "missing or invalid admin token"})
        return False

    # -- dispatch --------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", f"Content-Type, {ADMIN_TOKEN_HEADER}")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = urlsplit(self.path).path
        if path == "/health":
            return self._handle_health()
        if path == "/actions":
            return self._handle_actions()
        if path.startswith("/admin/"):
            if not self._admin_allowed():
                return
            if path == "/admin/flow":
                return self._handle_get_flow()
            if path == "/admin/nodes":
                return self._handle_nodes()
            if path == "/admin/debug":
                return self._handle_debug_stream()
            return self._send_tree(404, {"error": f"unknown admin endpoint {path}"})
        return self._handle_webhook("GET", path)

    def do_POST(self):
        path = urlsplit(self.path).path
        if path.startswith("/admin/"):
            if not self._admin_allowed():
                return
            if path == "/admin/flow":
                return self._handle_deploy()
            if path == "/admin/inject":
                return self._handle_inject()
            return self._send_tree(404, {"error": f"unknown admin endpoint {path}"})
        return self._handle_webhook("POST", path)

    # -- auxiliary services ------------------------------------------------

    def _handle_health(self):
        self._send_tree(200, {
            "status": "ok",
            "flow_version": self.app.engine.current_version(),
            "uptime_ms": self.app.uptime_ms(),
        })

    def _handle_actions(self):
        doc = self.app.engine.current_document()
        actions = flow_model.list_declared_actions(doc) if doc else []
        self._send_tree(200, actions)

    # -- webhook -----------------------------------------------------------

    def _handle_webhook(self, method: str, path: str):
        entry = (method, path)
        if entry not in self.app.engine.entry_points():
            return self._send(404, serialize_error("", f"no endpoint for {method} {path}"))
        try:
            request = parse_action_request(self._body())
        except ProtocolError as exc:
            return self._send(400, serialize_error("", f"{type(exc).__name__}: {exc}"))
        try:
            result = self.app.engine.execute(entry, request)
        except UnknownEntry:
            return self._send(404, serialize_error(request.next_action, "endpoint disappeared"))
        if result.terminal is not None:
            return self._send(200, serialize_action_response(result.terminal))
        if result.branch_errors:
            detail = "; ".join(f.error for f in result.branch_errors)
            return self._send(500, serialize_error(request.next_action, f"execution failed: {detail}"))
        return self._send(400, serialize_error(
            request.next_action, "no flow branch handles this action"))

    # -- admin -------------------------------------------------------------

    def _handle_get_flow(self):
        doc = self.app.engine.current_document()
        if doc is None:
            return self._send_tree(404, {"error": "no flow deployed"})
        self._send(200, flow_model.serialize_flow(doc))

    def _handle_deploy(self):
        try:
            doc = flow_model.parse_flow(self._body())
        except (flow_model.MalformedBody, flow_model.SchemaViolation) as exc:
            return self._send_tree(400, {"error": str(exc)})
        try:
            version = self.app.engine.deploy(doc)
        except CompileError as exc:
            return self._send_tree(422, exc.report.to_tree())
        self._send_tree(200, {"version": version})

    def _handle_nodes(self):
        specs = [spec.to_tree() for spec in self.app.engine.registry.specs()]
        self._send_tree(200, specs)

    def _handle_inject(self):
        try:
            tree = jsontree.loads(self._body())
        except jsontree.MalformedJSON as exc:
            return self._send_tree(400, {"error": str(exc)})
        if not isinstance(tree, dict) or "entry" not in tree or "request" not in tree:
            return self._send_tree(400, {"error": "body must carry entry and request"})
        entry_tree = tree["entry"]
        if not isinstance(entry_tree, dict):
            return self._send_tree(400, {"error": "entry must be {method, path}"})
        entry = (str(entry_tree.get("method", "POST")).upper(), str(entry_tree.get("path", "")))
        try:
            request = parse_action_request(jsontree.dump_bytes(tree["request"]))
        except ProtocolError as exc:
            return self._send_tree(400, {"error": f"{type(exc).__name__}: {exc}"})
        try:
            result = self.app.engine.inject(entry, request)
        except UnknownEntry as exc:
            return self._send_tree(404, {"error": str(exc)})
        self._send_tree(200, result.to_tree())

    # -- debug stream --------------------------------------------------------

    def _write_chunk(self, data: bytes) -> None:
        self.wfile.write(f"{len(data):X}\r\n".encode("ascii") + data + b"\r\n")
        self.wfile.flush()

    def _handle_debug_stream(self):
        # Chunked transfer so consumers see each event the moment it is sent.
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Transfer-Encoding", "chunked")
        self.send_header("Connection", "close")
        self.end_headers()
        sub = self.app.engine.subscribe_debug()
        try:
            self._write_chunk(b": connected\n\n")
            while self.app.running.is_set() and not sub.closed:
                event = sub.get(timeout=0.5)
                if event is None:
                    self._write_chunk(b": keep-alive\n\n")
                    continue
                data = jsontree.dumps(event.to_tree())
                self._write_chunk(f"event: debug\ndata: {data}\n\n".encode("utf-8"))
            self.wfile.write(b"0\r\n\r\n")
            self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            sub.close()
