"""Wire types and (de)serialization for the action-server webhook protocol.

Covers the subset a flow actually consumes: action name, sender, and slot
snapshot inbound; slot events and bot responses outbound. Everything else in
the request body is preserved verbatim in ``ActionRequest.raw``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from . import jsontree


class ProtocolError(ValueError):
    """Base for request parse failures; ``path`` names the offending field."""

    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


class MalformedBody(ProtocolError):
    """Body is not valid UTF-8 JSON."""


class MissingField(ProtocolError):
    """A required field is absent or empty."""


class TypeMismatch(ProtocolError):
    """A field is present but has the wrong shape."""


class EventKind(str, Enum):
    SLOT_SET = "slot_set"


class ResponseKind(str, Enum):
    TEXT = "text"
    BUTTONS = "buttons"
    IMAGE = "image"
    ATTACHMENT = "attachment"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Event:
    """A dialog-state manipulation; v1 supports slot events only."""

    kind: EventKind
    name: str
    value: Any

    def __post_init__(self):
        if self.kind is EventKind.SLOT_SET and not self.name:
            raise ValueError("slot_set event requires a non-empty slot name")


def slot_set(name: str, value) -> Event:
    return Event(kind=EventKind.SLOT_SET, name=name, value=value)


@dataclass(frozen=True)
class Button:
    title: str
    payload: str


@dataclass(frozen=True)
class BotResponse:
    """One utterance for the chatbot, shaped by ``kind``.

    Exactly the fields demanded by the kind are set; use the constructors
    below rather than instantiating directly.
    """

    kind: ResponseKind
    text: str | None = None
    buttons: tuple[Button, ...] | None = None
    media: str | None = None
    custom: Any = None

    def __post_init__(self):
        k = self.kind
        want = {
            ResponseKind.TEXT: ("text",),
            ResponseKind.BUTTONS: ("text", "buttons"),
            ResponseKind.IMAGE: ("media",),
            ResponseKind.ATTACHMENT: ("media",),
            ResponseKind.CUSTOM: ("custom",),
        }[k]
        for f in ("text", "buttons", "media", "custom"):
            present = getattr(self, f) is not None
            if f in want and not present:
                raise ValueError(f"{k.value} response requires {f}")
            if f not in want and present:
                raise ValueError(f"{k.value} response must not carry {f}")
        if k is ResponseKind.BUTTONS:
            if not self.buttons:
                raise ValueError("buttons response requires at least one button")
            if any(not b.title for b in self.buttons):
                raise ValueError("button titles must be non-empty")


def text_response(text: str) -> BotResponse:
    return BotResponse(kind=ResponseKind.TEXT, text=text)


def buttons_response(text: str, buttons: list[tuple[str, str]] | list[Button]) -> BotResponse:
    btns = tuple(b if isinstance(b, Button) else Button(*b) for b in buttons)
    return BotResponse(kind=ResponseKind.BUTTONS, text=text, buttons=btns)


def image_response(url: str) -> BotResponse:
    return BotResponse(kind=ResponseKind.IMAGE, media=url)


def attachment_response(locator: str) -> BotResponse:
    return BotResponse(kind=ResponseKind.ATTACHMENT, media=locator)


def custom_response(payload) -> BotResponse:
    return BotResponse(kind=ResponseKind.CUSTOM, custom=payload)


@dataclass(frozen=True)
class Tracker:
    sender_id: str
    slots: dict[str, Any] = field(default_factory=dict)
    latest_message: Any = None


@dataclass(frozen=True)
class ActionRequest:
    next_action: str
    sender_id: str
    tracker: Tracker
    version: str | None = None
    raw: Any = None


@dataclass(frozen=True)
class ActionResponse:
    events: tuple[Event, ...] = ()
    responses: tuple[BotResponse, ...] = ()


def parse_action_request(body: bytes | str) -> ActionRequest:
    """Unpack an incoming action request.

    Requires next_action, sender_id, and tracker; tolerates and preserves
    any extra fields (kept in ``raw``). An absent slots map parses as empty.
    """
    try:
        tree = jsontree.loads(body)
    except jsontree.MalformedJSON as exc:
        raise MalformedBody("$", str(exc)) from None
    if not isinstance(tree, dict):
        raise TypeMismatch("$", "request body must be a JSON object")

    action = tree.get("next_action")
    if action is None or action == "":
        raise MissingField("next_action", "required and must be non-empty")
    if not isinstance(action, str):
        raise TypeMismatch("next_action", "must be a string")

    sender = tree.get("sender_id")
    if sender is None:
        raise MissingField("sender_id", "required")
    if not isinstance(sender, str):
        raise TypeMismatch("sender_id", "must be a string")

    if "tracker" not in tree:
        raise MissingField("tracker", "required")
    tracker_tree = tree["tracker"]
    if not isinstance(tracker_tree, dict):
        raise TypeMismatch("tracker", "must be an object")

    slots = tracker_tree.get("slots", {})
    if not isinstance(slots, dict):
        raise TypeMismatch("tracker.slots", "must be an object")

    tracker_sender = tracker_tree.get("sender_id", sender)
    if not isinstance(tracker_sender, str):
        raise TypeMismatch("tracker.sender_id", "must be a string")

    version = tree.get("version")
    if version is not None and not isinstance(version, str):
        raise TypeMismatch("version", "must be a string")

    return ActionRequest(
        next_action=action,
        sender_id=sender,
        tracker=Tracker(
            sender_id=tracker_sender,
            slots=dict(slots),
            latest_message=tracker_tree.get("latest_message"),
        ),
        version=version,
        raw=tree,
    )


def event_to_tree(event: Event) -> dict:
    # Key order is part of the wire contract: event, name, value.
    return {"event": "slot", "name": event.name, "value": event.value}


def response_to_tree(resp: BotResponse) -> dict:
    if resp.kind is ResponseKind.TEXT:
        return {"text": resp.text}
    if resp.kind is ResponseKind.BUTTONS:
        return {
            "text": resp.text,
            "buttons": [{"title": b.title, "payload": b.payload} for b in resp.buttons],
        }
    if resp.kind is ResponseKind.IMAGE:
        return {"image": resp.media}
    if resp.kind is ResponseKind.ATTACHMENT:
        return {"attachment": resp.media}
    return {"custom": resp.custom}


def action_response_to_tree(resp: ActionResponse) -> dict:
    return {
        "events": [event_to_tree(e) for e in resp.events],
        "responses": [response_to_tree(r) for r in resp.responses],
    }


def serialize_action_response(resp: ActionResponse) -> bytes:
    """Deterministic JSON encoding of an action response."""
    return jsontree.dump_bytes(action_response_to_tree(resp))


def parse_action_response(body: bytes | str) -> ActionResponse:
    """Inverse of serialize_action_response, for tests and client tooling."""
    try:
        tree = jsontree.loads(body)
    except jsontree.MalformedJSON as exc:
        raise MalformedBody("$", str(exc)) from None
    if not isinstance(tree, dict):
        raise TypeMismatch("$", "response body must be a JSON object")
    events = []
    for i, etree in enumerate(tree.get("events", [])):
        if not isinstance(etree, dict) or etree.get("event") != "slot":
            raise TypeMismatch(f"events.{i}", "only slot events are supported")
        events.append(slot_set(etree.get("name", ""), etree.get("value")))
    responses = []
    for i, rtree in enumerate(tree.get("responses", [])):
        responses.append(_parse_response(rtree, f"responses.{i}"))
    return ActionResponse(events=tuple(events), responses=tuple(responses))


def _parse_response(tree, path: str) -> BotResponse:
    if not isinstance(tree, dict):
        raise TypeMismatch(path, "must be an object")
    if "buttons" in tree:
        return buttons_response(
            tree.get("text", ""),
            [(b.get("title", ""), b.get("payload", "")) for b in tree["buttons"]],
        )
    if "text" in tree:
        return text_response(tree["text"])
    if "image" in tree:
        return image_response(tree["image"])
    if "attachment" in tree:
        return attachment_response(tree["attachment"])
    if "custom" in tree:
        return custom_response(tree["custom"])
    raise TypeMismatch(path, "unrecognized response shape")


def serialize_error(action_name: str, message: str) -> bytes:
    """Body for rejection responses (HTTP 4xx/5xx)."""
    return jsontree.dump_bytes({"action_name": action_name, "error": message})
