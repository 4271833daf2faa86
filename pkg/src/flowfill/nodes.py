"""The built-in node palette.

Every node behavior has the same shape: given its compiled config and a
MessageObject it returns a list of (output_port, message) pairs, possibly
emitting debug events through the execution context on the way. Responses
and slot events accumulate inside the message itself; the finish node
snapshots them into an ActionResponse and http_response hands that to the
engine as the terminal result.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Any, Protocol

import requests

from . import jsontree, template
from .protocol import (
    ActionRequest,
    ActionResponse,
    BotResponse,
    Event,
    attachment_response,
    buttons_response,
    image_response,
    slot_set,
    text_response,
)

MAX_RESPONSE_BODY = 8 * 1024 * 1024
DEFAULT_TIMEOUT_MS = 10_000


class BranchError(Exception):
    """A node failure that aborts its own branch only."""


class Timeout(BranchError):
    pass


class ConnectionFailed(BranchError):
    pass


class BodyTooLarge(BranchError):
    pass


def new_msg_id() -> str:
    return uuid.uuid4().hex


@dataclass
class MessageObject:
    """The tree-structured value traveling through a flow."""

    payload: Any = None
    action: str | None = None
    slots: dict[str, Any] = field(default_factory=dict)
    request: Any = None
    collected_responses: list[BotResponse] = field(default_factory=list)
    collected_events: list[Event] = field(default_factory=list)
    status_code: int | None = None
    msg_id: str = field(default_factory=new_msg_id)
    finished: ActionResponse | None = None

    def clone(self) -> MessageObject:
        """Deep copy with a fresh msg_id; branches never share state."""
        return MessageObject(
            payload=jsontree.clone(self.payload),
            action=self.action,
            slots=jsontree.clone(self.slots),
            request=jsontree.clone(self.request),
            collected_responses=list(self.collected_responses),
            collected_events=list(self.collected_events),
            status_code=self.status_code,
            msg_id=new_msg_id(),
            finished=self.finished,
        )

    def to_tree(self) -> dict:
        """The template-visible view of the message."""
        return {
            "payload": self.payload,
            "action": self.action,
            "slots": self.slots,
            "request": self.request,
            "status_code": self.status_code,
        }


@dataclass(frozen=True)
class HttpReply:
    status: int
    body: bytes


class NodeContext(Protocol):
    """Engine services available to node behaviors during one evaluation."""

    request: ActionRequest | None
    strict_templates: bool

    def emit_debug(self, level: str, body) -> None: ...

    def record_terminal(self, msg: MessageObject) -> None: ...

    def http_send(self, method: str, url: str, headers: dict[str, str],
                  body: bytes | None, timeout_ms: int) -> HttpReply: ...


def default_http_send(method: str, url: str, headers: dict[str, str],
                      body: bytes | None, timeout_ms: int) -> HttpReply:
    """Outbound HTTP with a hard response-size cap."""
    try:
        resp = requests.request(
            method, url, headers=headers, data=body,
            timeout=timeout_ms / 1000.0, stream=True,
        )
        chunks = []
        size = 0
        for chunk in resp.iter_content(chunk_size=65536):
            size += len(chunk)
            if size > MAX_RESPONSE_BODY:
                resp.close()
                raise BodyTooLarge(f"response body exceeds {MAX_RESPONSE_BODY} bytes")
            chunks.append(chunk)
        return HttpReply(status=resp.status_code, body=b"".join(chunks))
    except requests.Timeout as exc:
        raise Timeout(f"{method} {url}: {exc}") from None
    except requests.ConnectionError as exc:
        raise ConnectionFailed(f"{method} {url}: {exc}") from None


Outputs = "list[tuple[int, MessageObject]]"


class NodeType:
    """One palette entry: metadata, config contract, and runtime behavior."""

    type_name: str = ""
    category: str = ""
    input_arity: int = 1
    output_arity: int | None = 1
    config_schema: dict = {}

    def output_arity_for(self, config) -> int | None:
        return self.output_arity

    def validate_config(self, config, flow_vars: dict) -> list[str]:
        if not isinstance(config, dict):
            return ["config must be an object"]
        return self._check(config, flow_vars)

    def _check(self, config: dict, flow_vars: dict) -> list[str]:
        return []

    def compile_config(self, config: dict, flow_vars: dict):
        """Parsed config; only called after validate_config passes."""
        return config

    def run(self, cfg, msg: MessageObject, ctx: NodeContext) -> list[tuple[int, MessageObject]]:
        raise NotImplementedError

    def spec(self) -> NodeSpec:
        return NodeSpec(
            type_name=self.type_name,
            input_arity=self.input_arity,
            output_arity=self.output_arity,
            config_schema=self.config_schema,
            category=self.category,
        )


@dataclass(frozen=True)
class NodeSpec:
    type_name: str
    input_arity: int
    output_arity: int | None
    config_schema: dict
    category: str

    def to_tree(self) -> dict:
        return {
            "type_name": self.type_name,
            "input_arity": self.input_arity,
            "output_arity": self.output_arity,
            "config_schema": self.config_schema,
            "category": self.category,
        }


def _check_template(config: dict, key: str, flow_vars: dict, problems: list[str],
                    required: bool = True) -> None:
    value = config.get(key)
    if value is None:
        if required:
            problems.append(f"{key} is required")
        return
    if not isinstance(value, str):
        problems.append(f"{key} must be a template string")
        return
    try:
        template.bind_vars(template.parse_template(value), flow_vars)
    except template.TemplateError as exc:
        problems.append(f"{key}: {exc}")


def _compile_template(config: dict, key: str, flow_vars: dict,
                      default: str | None = None) -> template.TemplateString | None:
    value = config.get(key, default)
    if value is None:
        return None
    return template.bind_vars(template.parse_template(value), flow_vars)


def _render(ctx: NodeContext, tpl: template.TemplateString, msg: MessageObject,
            mode: str = "raw", strict: bool | None = None) -> str:
    """Render against the message, warning about lenient missing values."""
    if strict is None:
        strict = ctx.strict_templates
    text, missing = template.render_with_report(tpl, msg.to_tree(), mode=mode, strict=strict)
    for path in missing:
        ctx.emit_debug("warning", f"no value at {path}; substituted empty string")
    return text


# --- endpoint markers -------------------------------------------------------

class HttpInNode(NodeType):
    type_name = "http_in"
    category = "endpoint"
    input_arity = 0
    output_arity = 1
    config_schema = {
        "type": "object",
        "required": ["method", "path"],
        "properties": {
            "method": {"type": "string", "enum": ["GET", "POST"]},
            "path": {"type": "string", "pattern": "^/"},
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        method = config.get("method")
        if method not in ("GET", "POST"):
            problems.append("method must be GET or POST")
        path = config.get("path")
        if not isinstance(path, str) or not path.startswith("/"):
            problems.append("path must be a string starting with '/'")
        return problems

    def compile_config(self, config, flow_vars):
        return {"method": config["method"], "path": config["path"]}

    def run(self, cfg, msg, ctx):
        return [(0, msg)]


class HttpResponseNode(NodeType):
    type_name = "http_response"
    category = "endpoint"
    input_arity = 1
    output_arity = 0
    config_schema = {
        "type": "object",
        "properties": {},
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def run(self, cfg, msg, ctx):
        if msg.finished is None:
            ctx.emit_debug("warning", "message reached http_response without a finish node; dropped")
        else:
            ctx.record_terminal(msg)
        return []


# --- protocol adapters ------------------------------------------------------

class InitNode(NodeType):
    """Unpacks the incoming action request into a fresh MessageObject."""

    type_name = "init"
    category = "protocol"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "properties": {},
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def run(self, cfg, msg, ctx):
        req = ctx.request
        if req is None:
            raise BranchError("init node evaluated outside a request execution")
        return [(0, build_initial_message(req))]


def build_initial_message(req: ActionRequest) -> MessageObject:
    return MessageObject(
        payload=jsontree.clone(req.raw),
        action=req.next_action,
        slots=jsontree.clone(req.tracker.slots),
        request=req.raw,
    )


class FinishNode(NodeType):
    """Snapshots the accumulated responses/events into an ActionResponse."""

    type_name = "finish"
    category = "protocol"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "properties": {},
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def run(self, cfg, msg, ctx):
        msg.finished = ActionResponse(
            events=tuple(msg.collected_events),
            responses=tuple(msg.collected_responses),
        )
        return [(0, msg)]


# --- dispatch ---------------------------------------------------------------

RULE_OPERATORS = ("equals", "not_equals", "contains", "is_set")


@dataclass(frozen=True)
class SwitchRule:
    operator: str
    value: str | None = None


@dataclass(frozen=True)
class SwitchConfig:
    property: template.Path
    rules: tuple[SwitchRule, ...]
    otherwise: bool
    check_all: bool


def rule_matches(rule: SwitchRule, resolved) -> bool:
    """Rule semantics: equals/contains compare the stringified value and
    never match an absent or null property; not_equals is the exact negation
    of equals; is_set means present and non-null."""
    if rule.operator == "is_set":
        return resolved is not template.ABSENT and resolved is not None
    if resolved is template.ABSENT or resolved is None:
        return rule.operator == "not_equals"
    text = template.stringify(resolved)
    if rule.operator == "equals":
        return text == rule.value
    if rule.operator == "not_equals":
        return text != rule.value
    if rule.operator == "contains":
        return rule.value is not None and rule.value in text
    raise ValueError(f"unknown operator {rule.operator!r}")


class SwitchNode(NodeType):
    type_name = "switch"
    category = "logic"
    input_arity = 1
    output_arity = None  # one port per rule, plus the otherwise port
    config_schema = {
        "type": "object",
        "required": ["property", "rules"],
        "properties": {
            "property": {"type": "string"},
            "rules": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["operator"],
                    "properties": {
                        "operator": {"type": "string", "enum": list(RULE_OPERATORS)},
                        "value": {"type": "string"},
                    },
                    "additionalProperties": False,
                },
            },
            "otherwise": {"type": "boolean", "default": False},
            "check_all": {"type": "boolean", "default": False},
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def output_arity_for(self, config):
        if not isinstance(config, dict) or not isinstance(config.get("rules"), list):
            return None
        return len(config["rules"]) + (1 if config.get("otherwise") else 0)

    def _check(self, config, flow_vars):
        problems = []
        prop = config.get("property")
        if not isinstance(prop, str) or not prop:
            problems.append("property must be a non-empty path string")
        else:
            try:
                template.Path.parse(prop)
            except template.TemplateError as exc:
                problems.append(f"property: {exc}")
        rules = config.get("rules")
        if not isinstance(rules, list):
            problems.append("rules must be a list")
            rules = []
        for i, rule in enumerate(rules):
            if not isinstance(rule, dict):
                problems.append(f"rules.{i} must be an object")
                continue
            op = rule.get("operator")
            if op not in RULE_OPERATORS:
                problems.append(f"rules.{i}.operator must be one of {', '.join(RULE_OPERATORS)}")
                continue
            value = rule.get("value")
            if op == "is_set":
                if value is not None:
                    problems.append(f"rules.{i}: is_set takes no value")
            elif not isinstance(value, str):
                problems.append(f"rules.{i}.value must be a string for {op}")
        if isinstance(rules, list) and not rules and not config.get("otherwise"):
            problems.append("switch needs at least one rule or otherwise=true")
        for key in ("otherwise", "check_all"):
            if key in config and not isinstance(config[key], bool):
                problems.append(f"{key} must be a boolean")
        return problems

    def compile_config(self, config, flow_vars):
        return SwitchConfig(
            property=template.Path.parse(config["property"]),
            rules=tuple(
                SwitchRule(operator=r["operator"], value=r.get("value"))
                for r in config["rules"]
            ),
            otherwise=bool(config.get("otherwise", False)),
            check_all=bool(config.get("check_all", False)),
        )

    def run(self, cfg: SwitchConfig, msg, ctx):
        resolved = template.resolve_path(msg.to_tree(), cfg.property)
        matching = [i for i, rule in enumerate(cfg.rules) if rule_matches(rule, resolved)]
        if not cfg.check_all:
            matching = matching[:1]
        if matching:
            if cfg.check_all:
                return [(port, msg.clone()) for port in matching]
            return [(matching[0], msg)]
        if cfg.otherwise:
            return [(len(cfg.rules), msg)]
        ctx.emit_debug(
            "warning",
            f"no rule matched {cfg.property} = {template.stringify(resolved)!r}; message dropped",
        )
        return []


# --- transform --------------------------------------------------------------

WRITABLE_ROOTS = ("payload", "slots", "action")


@dataclass(frozen=True)
class TemplateConfig:
    template: template.TemplateString
    target: template.Path
    mode: str
    strict: bool


class TemplateNode(NodeType):
    type_name = "template"
    category = "transform"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "required": ["template"],
        "properties": {
            "template": {"type": "string"},
            "target": {"type": "string", "default": "payload"},
            "mode": {"type": "string", "enum": ["raw", "url_component"], "default": "raw"},
            "strict": {"type": "boolean", "default": False},
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        _check_template(config, "template", flow_vars, problems)
        target = config.get("target", "payload")
        if not isinstance(target, str):
            problems.append("target must be a path string")
        else:
            try:
                path = template.Path.parse(target)
                if path.steps[0] not in WRITABLE_ROOTS:
                    problems.append(f"target must start with one of {', '.join(WRITABLE_ROOTS)}")
            except template.TemplateError as exc:
                problems.append(f"target: {exc}")
        if config.get("mode", "raw") not in ("raw", "url_component"):
            problems.append("mode must be raw or url_component")
        if "strict" in config and not isinstance(config["strict"], bool):
            problems.append("strict must be a boolean")
        return problems

    def compile_config(self, config, flow_vars):
        return TemplateConfig(
            template=_compile_template(config, "template", flow_vars),
            target=template.Path.parse(config.get("target", "payload")),
            mode=config.get("mode", "raw"),
            strict=bool(config.get("strict", False)),
        )

    def run(self, cfg: TemplateConfig, msg, ctx):
        text = _render(ctx, cfg.template, msg, mode=cfg.mode,
                       strict=cfg.strict or ctx.strict_templates)
        root = {"payload": msg.payload, "slots": msg.slots, "action": msg.action}
        template.set_path(root, cfg.target, text)
        msg.payload = root["payload"]
        msg.slots = root["slots"]
        msg.action = root["action"]
        return [(0, msg)]


# --- outbound HTTP ----------------------------------------------------------

@dataclass(frozen=True)
class HttpRequestConfig:
    method: str
    url_from: str
    url: template.TemplateString | None
    headers: dict[str, str]
    timeout_ms: int
    body_from: template.Path | None


class HttpRequestNode(NodeType):
    type_name = "http_request"
    category = "network"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "required": ["method"],
        "properties": {
            "method": {"type": "string", "enum": ["GET", "POST"]},
            "url_from": {"type": "string", "enum": ["payload", "config"], "default": "payload"},
            "url": {"type": "string"},
            "headers": {"type": "object", "additionalProperties": {"type": "string"}},
            "timeout_ms": {"type": "integer", "minimum": 1, "default": DEFAULT_TIMEOUT_MS},
            "body_from": {"type": "string"},
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        if config.get("method") not in ("GET", "POST"):
            problems.append("method must be GET or POST")
        url_from = config.get("url_from", "payload")
        if url_from not in ("payload", "config"):
            problems.append("url_from must be payload or config")
        if url_from == "config":
            _check_template(config, "url", flow_vars, problems)
        headers = config.get("headers", {})
        if not isinstance(headers, dict) or any(
            not isinstance(k, str) or not isinstance(v, str) for k, v in headers.items()
        ):
            problems.append("headers must map strings to strings")
        timeout = config.get("timeout_ms", DEFAULT_TIMEOUT_MS)
        if not isinstance(timeout, int) or isinstance(timeout, bool) or timeout <= 0:
            problems.append("timeout_ms must be a positive integer")
        if "body_from" in config:
            if not isinstance(config["body_from"], str):
                problems.append("body_from must be a path string")
            else:
                try:
                    template.Path.parse(config["body_from"])
                except template.TemplateError as exc:
                    problems.append(f"body_from: {exc}")
        return problems

    def compile_config(self, config, flow_vars):
        return HttpRequestConfig(
            method=config["method"],
            url_from=config.get("url_from", "payload"),
            url=_compile_template(config, "url", flow_vars),
            headers=dict(config.get("headers", {})),
            timeout_ms=config.get("timeout_ms", DEFAULT_TIMEOUT_MS),
            body_from=template.Path.parse(config["body_from"]) if "body_from" in config else None,
        )

    def run(self, cfg: HttpRequestConfig, msg, ctx):
        if cfg.url_from == "config":
            url = _render(ctx, cfg.url, msg, mode="url_component")
        else:
            url = template.stringify(msg.payload)
        if not url:
            raise BranchError("no URL available for http_request")
        body = None
        headers = dict(cfg.headers)
        if cfg.body_from is not None:
            value = template.resolve_path(msg.to_tree(), cfg.body_from)
            if value is not template.ABSENT:
                body = jsontree.dump_bytes(value)
                headers.setdefault("Content-Type", "application/json")
        reply = ctx.http_send(cfg.method, url, headers, body, cfg.timeout_ms)
        msg.status_code = reply.status
        try:
            msg.payload = jsontree.loads(reply.body)
        except jsontree.MalformedJSON:
            msg.payload = reply.body.decode("utf-8", errors="replace")
        return [(0, msg)]


# --- response and event emitters --------------------------------------------

class SendTextNode(NodeType):
    type_name = "sendtext"
    category = "emit"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "required": ["text"],
        "properties": {"text": {"type": "string"}},
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        _check_template(config, "text", flow_vars, problems)
        return problems

    def compile_config(self, config, flow_vars):
        return _compile_template(config, "text", flow_vars)

    def run(self, cfg: template.TemplateString, msg, ctx):
        msg.collected_responses.append(text_response(_render(ctx, cfg, msg)))
        return [(0, msg)]


@dataclass(frozen=True)
class ButtonConfig:
    title: template.TemplateString
    payload: template.TemplateString


@dataclass(frozen=True)
class SendButtonsConfig:
    text: template.TemplateString
    buttons: tuple[ButtonConfig, ...]


class SendButtonsNode(NodeType):
    type_name = "sendbuttons"
    category = "emit"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "required": ["text", "buttons"],
        "properties": {
            "text": {"type": "string"},
            "buttons": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["title", "payload"],
                    "properties": {
                        "title": {"type": "string"},
                        "payload": {"type": "string"},
                    },
                    "additionalProperties": False,
                },
            },
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        _check_template(config, "text", flow_vars, problems)
        buttons = config.get("buttons")
        if not isinstance(buttons, list) or not buttons:
            problems.append("buttons must be a non-empty list")
            return problems
        for i, button in enumerate(buttons):
            if not isinstance(button, dict):
                problems.append(f"buttons.{i} must be an object")
                continue
            _check_template(button, "title", flow_vars, problems)
            _check_template(button, "payload", flow_vars, problems)
        return problems

    def compile_config(self, config, flow_vars):
        return SendButtonsConfig(
            text=_compile_template(config, "text", flow_vars),
            buttons=tuple(
                ButtonConfig(
                    title=_compile_template(b, "title", flow_vars),
                    payload=_compile_template(b, "payload", flow_vars),
                )
                for b in config["buttons"]
            ),
        )

    def run(self, cfg: SendButtonsConfig, msg, ctx):
        rendered = [
            (_render(ctx, b.title, msg), _render(ctx, b.payload, msg))
            for b in cfg.buttons
        ]
        msg.collected_responses.append(buttons_response(_render(ctx, cfg.text, msg), rendered))
        return [(0, msg)]


@dataclass(frozen=True)
class SendExtraConfig:
    kind: str
    media: template.TemplateString


class SendExtraNode(NodeType):
    type_name = "sendextra"
    category = "emit"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "required": ["kind", "media"],
        "properties": {
            "kind": {"type": "string", "enum": ["image", "attachment"]},
            "media": {"type": "string"},
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        if config.get("kind") not in ("image", "attachment"):
            problems.append("kind must be image or attachment")
        _check_template(config, "media", flow_vars, problems)
        return problems

    def compile_config(self, config, flow_vars):
        return SendExtraConfig(
            kind=config["kind"],
            media=_compile_template(config, "media", flow_vars),
        )

    def run(self, cfg: SendExtraConfig, msg, ctx):
        media = _render(ctx, cfg.media, msg)
        make = image_response if cfg.kind == "image" else attachment_response
        msg.collected_responses.append(make(media))
        return [(0, msg)]


@dataclass(frozen=True)
class SlotAssignment:
    name: str
    value: template.TemplateString | None  # None clears the slot


@dataclass(frozen=True)
class SetSlotsConfig:
    assignments: tuple[SlotAssignment, ...]


class SetSlotsNode(NodeType):
    type_name = "setslots"
    category = "emit"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "required": ["assignments"],
        "properties": {
            "assignments": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["name"],
                    "properties": {
                        "name": {"type": "string", "minLength": 1},
                        "value": {"type": ["string", "null"]},
                    },
                    "additionalProperties": False,
                },
            },
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        assignments = config.get("assignments")
        if not isinstance(assignments, list) or not assignments:
            problems.append("assignments must be a non-empty list")
            return problems
        for i, assignment in enumerate(assignments):
            if not isinstance(assignment, dict):
                problems.append(f"assignments.{i} must be an object")
                continue
            name = assignment.get("name")
            if not isinstance(name, str) or not name:
                problems.append(f"assignments.{i}.name must be a non-empty string")
            value = assignment.get("value")
            if value is not None:
                _check_template(assignment, "value", flow_vars, problems, required=False)
        return problems

    def compile_config(self, config, flow_vars):
        return SetSlotsConfig(
            assignments=tuple(
                SlotAssignment(
                    name=a["name"],
                    value=_compile_template(a, "value", flow_vars) if a.get("value") is not None else None,
                )
                for a in config["assignments"]
            ),
        )

    def run(self, cfg: SetSlotsConfig, msg, ctx):
        for assignment in cfg.assignments:
            if assignment.value is None:
                value = None
            else:
                value = _render(ctx, assignment.value, msg)
            msg.collected_events.append(slot_set(assignment.name, value))
        return [(0, msg)]


# --- diagnostics ------------------------------------------------------------

@dataclass(frozen=True)
class DebugConfig:
    select: str
    path: template.Path | None


class DebugNode(NodeType):
    type_name = "debug"
    category = "diagnostic"
    input_arity = 1
    output_arity = 1
    config_schema = {
        "type": "object",
        "properties": {
            "select": {"type": "string", "enum": ["whole_message", "path"],
                       "default": "whole_message"},
            "path": {"type": "string"},
        },
        "patternProperties": {"^_": {}},
        "additionalProperties": False,
    }

    def _check(self, config, flow_vars):
        problems = []
        select = config.get("select", "whole_message")
        if select not in ("whole_message", "path"):
            problems.append("select must be whole_message or path")
        if select == "path":
            path = config.get("path")
            if not isinstance(path, str):
                problems.append("path is required when select=path")
            else:
                try:
                    template.Path.parse(path)
                except template.TemplateError as exc:
                    problems.append(f"path: {exc}")
        return problems

    def compile_config(self, config, flow_vars):
        select = config.get("select", "whole_message")
        return DebugConfig(
            select=select,
            path=template.Path.parse(config["path"]) if select == "path" else None,
        )

    def run(self, cfg: DebugConfig, msg, ctx):
        if cfg.select == "whole_message":
            body = jsontree.clone(msg.to_tree())
        else:
            resolved = template.resolve_path(msg.to_tree(), cfg.path)
            if resolved is template.ABSENT:
                body = {"path": str(cfg.path), "absent": True}
            else:
                body = jsontree.clone(resolved)
        ctx.emit_debug("info", body)
        return [(0, msg)]


# --- registry ----------------------------------------------------------------

class Registry:
    """Node types by name; immutable once handed to the engine."""

    def __init__(self, types: list[NodeType] | None = None):
        self._types: dict[str, NodeType] = {}
        for node_type in types or []:
            self.register(node_type)

    def register(self, node_type: NodeType) -> None:
        if node_type.type_name in self._types:
            raise ValueError(f"node type {node_type.type_name!r} already registered")
        self._types[node_type.type_name] = node_type

    def get(self, type_name: str) -> NodeType | None:
        return self._types.get(type_name)

    def specs(self) -> list[NodeSpec]:
        return [self._types[name].spec() for name in sorted(self._types)]

    def type_names(self) -> list[str]:
        return sorted(self._types)


def standard_registry() -> Registry:
    return Registry([
        HttpInNode(),
        HttpResponseNode(),
        InitNode(),
        FinishNode(),
        SwitchNode(),
        TemplateNode(),
        HttpRequestNode(),
        SendTextNode(),
        SendButtonsNode(),
        SendExtraNode(),
        SetSlotsNode(),
        DebugNode(),
    ])
