"""Desk-scale test harness: stub API servers and a scenario runner.

Stubs imitate the external services a flow calls (fixture rules, first
match wins, every request recorded). The scenario runner plays scripted
action requests against a live webhook and checks matcher expectations,
producing a machine-readable report plus a human summary. Together they
reproduce the demo dialog without touching the real APIs.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit

import requests

from . import jsontree, template

log = logging.getLogger("flowfill.harness")

STUB_SCHEMA = "flowfill-stub/1"
SCENARIO_SCHEMA = "flowfill-scenario/1"


@dataclass(frozen=True)
class StubRule:
    method: str
    path_prefix: str
    query_contains: str = ""
    status: int = 200
    body: object = None
    delay_ms: int = 0

    def matches(self, method: str, path: str, query: str) -> bool:
        return (
            method == self.method
            and path.startswith(self.path_prefix)
            and (not self.query_contains or self.query_contains in query)
        )


@dataclass(frozen=True)
class RecordedRequest:
    method: str
    path: str
    query: str


class _StubHttpd(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128


class StubServer:
    """Serves fixture rules; remembers every request it saw."""

    def __init__(self, rules: list[StubRule], bind: str = "127.0.0.1:0"):
        if not rules:
            raise ValueError("a stub needs at least one rule")
        self.rules = list(rules)
        host, _, port_text = bind.rpartition(":")
        self._httpd = _StubHttpd((host, int(port_text)), _make_stub_handler(self))
        self._thread: threading.Thread | None = None
        self._log_lock = threading.Lock()
        self.requests: list[RecordedRequest] = []

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host = self._httpd.server_address[0]
        return f"http://{host}:{self.port}"

    def record(self, req: RecordedRequest) -> None:
        with self._log_lock:
            self.requests.append(req)

    def start(self) -> StubServer:
        self._thread = threading.Thread(
            target=lambda: self._httpd.serve_forever(poll_interval=0.05),
            name=f"stub-{self.port}", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> StubServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def _make_stub_handler(stub: StubServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("stub %s " + fmt, stub.port, *args)

        def _serve(self, method: str):
            parts = urlsplit(self.path)
            stub.record(RecordedRequest(method=method, path=parts.path, query=parts.query))
            for rule in stub.rules:
                if rule.matches(method, parts.path, parts.query):
                    if rule.delay_ms:
                        time.sleep(rule.delay_ms / 1000.0)
                    body = jsontree.dump_bytes(rule.body)
                    self.send_response(rule.status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
            self.send_response(404)
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            self._serve("GET")

        def do_POST(self):
            length = int(self.headers.get("Content-Length") or 0)
            if length:
                self.rfile.read(length)
            self._serve("POST")

    return Handler


def parse_stub_rules(body: bytes | str) -> list[StubRule]:
    """Load a flowfill-stub/1 rules file."""
    tree = jsontree.loads(body)
    if not isinstance(tree, dict) or tree.get("version") != STUB_SCHEMA:
        raise ValueError(f"expected a {STUB_SCHEMA} document")
    rules = []
    for rule in tree.get("rules", []):
        match = rule.get("match", {})
        response = rule.get("response", {})
        rules.append(StubRule(
            method=match.get("method", "GET").upper(),
            path_prefix=match.get("path_prefix", "/"),
            query_contains=match.get("query_contains", ""),
            status=response.get("status", 200),
            body=response.get("body"),
            delay_ms=response.get("delay_ms", 0),
        ))
    return rules


def start_stub(rules: list[StubRule], bind: str = "127.0.0.1:0") -> StubServer:
    return StubServer(rules, bind).start()


# --- scenarios ---------------------------------------------------------------

@dataclass(frozen=True)
class Matcher:
    path: template.Path
    operator: str  # equals | contains | absent
    value: object = None


@dataclass(frozen=True)
class ScenarioStep:
    request: dict
    expect: tuple[Matcher, ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    steps: tuple[ScenarioStep, ...]


@dataclass
class MatcherResult:
    matcher: Matcher
    passed: bool
    actual: object = None

    def to_tree(self) -> dict:
        return {
            "path": str(self.matcher.path),
            "operator": self.matcher.operator,
            "expected": self.matcher.value,
            "actual": None if self.actual is template.ABSENT else self.actual,
            "passed": self.passed,
        }


@dataclass
class StepResult:
    passed: bool
    status: int | None
    matchers: list[MatcherResult] = field(default_factory=list)
    error: str | None = None
    duration_ms: float = 0.0

    def to_tree(self) -> dict:
        return {
            "passed": self.passed,
            "status": self.status,
            "error": self.error,
            "duration_ms": self.duration_ms,
            "matchers": [m.to_tree() for m in self.matchers],
        }


@dataclass
class ScenarioReport:
    name: str
    steps: list[StepResult]

    @property
    def passed(self) -> bool:
        return all(step.passed for step in self.steps)

    def to_tree(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "steps": [s.to_tree() for s in self.steps],
        }

    def summary(self) -> str:
        lines = [f"scenario {self.name!r}: {'PASS' if self.passed else 'FAIL'}"]
        for i, step in enumerate(self.steps):
            verdict = "pass" if step.passed else ("error" if step.error else "fail")
            lines.append(f"  step {i}: {verdict} ({step.duration_ms:.0f} ms)")
            for m in step.matchers:
                if not m.passed:
                    lines.append(
                        f"    {m.matcher.path} {m.matcher.operator} "
                        f"{m.matcher.value!r}: got {m.actual!r}"
                    )
            if step.error:
                lines.append(f"    {step.error}")
        return "\n".join(lines)


def parse_scenario(body: bytes | str) -> Scenario:
    """Load a flowfill-scenario/1 file."""
    tree = jsontree.loads(body)
    if not isinstance(tree, dict) or tree.get("version") != SCENARIO_SCHEMA:
        raise ValueError(f"expected a {SCENARIO_SCHEMA} document")
    steps = []
    for step in tree.get("steps", []):
        matchers = tuple(
            Matcher(
                path=template.Path.parse(m["path"]),
                operator=m.get("operator", "equals"),
                value=m.get("value"),
            )
            for m in step.get("expect", [])
        )
        steps.append(ScenarioStep(request=step["request"], expect=matchers))
    return Scenario(name=tree.get("name", ""), steps=tuple(steps))


def check_matcher(matcher: Matcher, response_tree) -> MatcherResult:
    resolved = template.resolve_path(response_tree, matcher.path)
    if matcher.operator == "absent":
        return MatcherResult(matcher, passed=resolved is template.ABSENT, actual=resolved)
    if resolved is template.ABSENT:
        return MatcherResult(matcher, passed=False, actual=resolved)
    if matcher.operator == "equals":
        return MatcherResult(matcher, passed=resolved == matcher.value, actual=resolved)
    if matcher.operator == "contains":
        ok = isinstance(resolved, str) and isinstance(matcher.value, str) and matcher.value in resolved
        return MatcherResult(matcher, passed=ok, actual=resolved)
    raise ValueError(f"unknown matcher operator {matcher.operator!r}")


def run_scenario(scenario: Scenario, webhook_url: str, timeout_s: float = 10.0) -> ScenarioReport:
    """Play every step in order; a failing step does not stop later ones."""
    results: list[StepResult] = []
    for step in scenario.steps:
        started = time.monotonic()
        try:
            resp = requests.post(webhook_url, data=jsontree.dump_bytes(step.request),
                                 headers={"Content-Type": "application/json"},
                                 timeout=timeout_s)
        except requests.RequestException as exc:
            results.append(StepResult(
                passed=False, status=None, error=f"transport: {exc}",
                duration_ms=(time.monotonic() - started) * 1000.0,
            ))
            continue
        duration_ms = (time.monotonic() - started) * 1000.0
        try:
            tree = jsontree.loads(resp.content)
        except jsontree.MalformedJSON as exc:
            results.append(StepResult(
                passed=False, status=resp.status_code,
                error=f"response not JSON: {exc}", duration_ms=duration_ms,
            ))
            continue
        matcher_results = [check_matcher(m, tree) for m in step.expect]
        results.append(StepResult(
            passed=all(m.passed for m in matcher_results),
            status=resp.status_code,
            matchers=matcher_results,
            duration_ms=duration_ms,
        ))
    return ScenarioReport(name=scenario.name, steps=results)
