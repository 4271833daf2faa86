"""Shared fixtures: demo flow, API stubs, and a live server stack."""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from pathlib import Path

import pytest
import requests

from flowfill import flow_model, harness, jsontree
from flowfill.engine import Engine
from flowfill.server import FlowfillServer, ServerConfig

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_DIR = REPO_ROOT / "demo"
FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


def load_demo_doc() -> flow_model.FlowDocument:
    return flow_model.parse_flow((DEMO_DIR / "demo.flow.json").read_bytes())


def rebind_vars(doc: flow_model.FlowDocument, **new_vars) -> flow_model.FlowDocument:
    """Copy of the document with metadata.vars entries replaced."""
    metadata = dict(doc.metadata)
    merged = dict(metadata.get("vars", {}))
    merged.update(new_vars)
    metadata["vars"] = merged
    return flow_model.FlowDocument(name=doc.name, nodes=doc.nodes, metadata=metadata)


def request_tree(action: str, slots: dict | None = None, sender: str = "test") -> dict:
    return {
        "next_action": action,
        "sender_id": sender,
        "tracker": {"slots": slots or {}},
    }


def post_webhook(base_url: str, action: str, slots: dict | None = None,
                 timeout: float = 10.0) -> requests.Response:
    return requests.post(
        f"{base_url}/webhook",
        data=jsontree.dump_bytes(request_tree(action, slots)),
        headers={"Content-Type": "application/json"},
        timeout=timeout,
    )


@pytest.fixture
def demo_doc():
    return load_demo_doc()


@pytest.fixture
def weather_stub():
    rules = harness.parse_stub_rules((DEMO_DIR / "stubs.weather.json").read_bytes())
    stub = harness.start_stub(rules)
    yield stub
    stub.stop()


@pytest.fixture
def wiki_stub():
    rules = harness.parse_stub_rules((DEMO_DIR / "stubs.wiki.json").read_bytes())
    stub = harness.start_stub(rules)
    yield stub
    stub.stop()


@dataclass
class DemoStack:
    server: FlowfillServer
    weather: harness.StubServer
    wiki: harness.StubServer
    doc: flow_model.FlowDocument

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.server.port}"

    @property
    def engine(self) -> Engine:
        return self.server.engine


@pytest.fixture
def demo_stack(weather_stub, wiki_stub):
    """Live server with the demo flow deployed against loopback stubs."""
    doc = rebind_vars(load_demo_doc(),
                      weather_base=weather_stub.url, wiki_base=wiki_stub.url)
    server = FlowfillServer(ServerConfig(bind_address="127.0.0.1:0"))
    server.start()
    server.engine.deploy(doc)
    stack = DemoStack(server=server, weather=weather_stub, wiki=wiki_stub, doc=doc)
    yield stack
    server.stop()


@pytest.fixture
def bare_server():
    """Server with no flow deployed."""
    server = FlowfillServer(ServerConfig(bind_address="127.0.0.1:0"))
    server.start()
    yield server
    server.stop()


class SseConsumer:
    """Background reader for the /admin/debug event stream."""

    def __init__(self, base_url: str):
        self.events: list[dict] = []
        self._connected = threading.Event()
        self._resp = requests.get(f"{base_url}/admin/debug", stream=True, timeout=30)
        self._thread = threading.Thread(target=self._pump, daemon=True)
        self._thread.start()
        if not self._connected.wait(timeout=5):
            raise TimeoutError("SSE stream never sent its opening comment")

    def _pump(self):
        buf = b""
        try:
            for chunk in self._resp.iter_content(chunk_size=None):
                buf += chunk
                while b"\n\n" in buf:
                    frame, buf = buf.split(b"\n\n", 1)
                    if frame.startswith(b":"):
                        self._connected.set()
                        continue
                    for line in frame.split(b"\n"):
                        if line.startswith(b"data: "):
                            self.events.append(jsontree.loads(line[len(b"data: "):]))
        except (requests.RequestException, AttributeError, ValueError):
            pass  # stream torn down by close()

    def wait_for(self, predicate, timeout: float = 5.0) -> dict | None:
        import time
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            for event in list(self.events):
                if predicate(event):
                    return event
            time.sleep(0.02)
        return None

    def close(self):
        self._resp.close()


def make_node(node_id: str, node_type: str, config: dict | None = None,
              wires=()) -> flow_model.NodeInstance:
    return flow_model.NodeInstance(
        id=node_id, type=node_type, config=config if config is not None else {},
        wires=tuple(tuple(port) for port in wires),
    )


def linear_doc(mids: list[tuple[str, dict]], name: str = "linear",
               path: str = "/webhook", metadata: dict | None = None) -> flow_model.FlowDocument:
    """http_in -> init -> <mids> -> finish -> http_response, wired in a line."""
    chain = (
        [("rx", "http_in", {"method": "POST", "path": path})]
        + [(f"mid{i}", node_type, config) for i, (node_type, config) in enumerate(mids)]
    )
    chain.insert(1, ("unpack", "init", {}))
    chain.append(("wrap", "finish", {}))
    chain.append(("tx", "http_response", {}))
    nodes = []
    for i, (node_id, node_type, config) in enumerate(chain):
        wires = () if node_type == "http_response" else ((chain[i + 1][0],),)
        nodes.append(make_node(node_id, node_type, config, wires))
    return flow_model.FlowDocument(name=name, nodes=tuple(nodes),
                                   metadata=metadata or {})


def marker_doc(marker: str, mids: list[tuple[str, dict]] | None = None) -> flow_model.FlowDocument:
    """Version-marker flow: single sendtext of the marker literal."""
    return linear_doc((mids or []) + [("sendtext", {"text": marker})], name=marker)


__all__ = [
    "DemoStack",
    "SseConsumer",
    "linear_doc",
    "load_demo_doc",
    "make_node",
    "marker_doc",
    "post_webhook",
    "rebind_vars",
    "request_tree",
    "replace",
]
