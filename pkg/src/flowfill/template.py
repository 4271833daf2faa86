"""Placeholder templates: ``literal {{dotted.path.0}} literal``.

A template is split into literal and placeholder segments at parse time;
rendering walks each placeholder's path into a tree value and splices in
a stringification of what it finds. There are no conditionals or loops,
only substitution.
"""

from __future__ import annotations

import urllib.parse
from dataclasses import dataclass
from decimal import Decimal
from typing import Any

OPEN = "{{"
CLOSE = "}}"


class _Absent:
    """Singleton marking a path that resolved to nothing (distinct from null)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<absent>"

    def __bool__(self):
        return False


ABSENT = _Absent()


class TemplateError(ValueError):
    pass


class UnbalancedBraces(TemplateError):
    """An opening ``{{`` has no matching ``}}``."""


class EmptyPlaceholder(TemplateError):
    """A placeholder is empty or contains an empty path step."""


class MissingValue(TemplateError):
    """Strict render hit a placeholder that resolved to absent."""

    def __init__(self, path: Path):
        self.path = path
        super().__init__(f"no value at {path}")


@dataclass(frozen=True)
class Path:
    """Dotted lookup path; digit-only steps index into lists."""

    steps: tuple[str, ...]

    def __post_init__(self):
        if not self.steps:
            raise EmptyPlaceholder("path has no steps")
        if any(s == "" for s in self.steps):
            raise EmptyPlaceholder(f"empty step in path {'.'.join(self.steps)!r}")

    def __str__(self):
        return ".".join(self.steps)

    @classmethod
    def parse(cls, text: str) -> Path:
        # Whitespace around steps is trimmed; "payload. location" == "payload.location".
        return cls(tuple(step.strip() for step in text.split(".")))


@dataclass(frozen=True)
class TemplateString:
    """Parsed template: alternating literal and placeholder segments."""

    source: str
    segments: tuple[str | Path, ...]

    def placeholders(self) -> list[Path]:
        return [s for s in self.segments if isinstance(s, Path)]


def parse_template(text: str) -> TemplateString:
    """Split template text on ``{{...}}`` spans."""
    segments: list[str | Path] = []
    pos = 0
    while True:
        start = text.find(OPEN, pos)
        if start < 0:
            if pos < len(text) or not segments:
                segments.append(text[pos:])
            break
        end = text.find(CLOSE, start + len(OPEN))
        if end < 0:
            raise UnbalancedBraces(f"no closing braces for placeholder at offset {start}")
        if start > pos:
            segments.append(text[pos:start])
        inner = text[start + len(OPEN):end].strip()
        if not inner:
            raise EmptyPlaceholder(f"empty placeholder at offset {start}")
        segments.append(Path.parse(inner))
        pos = end + len(CLOSE)
    return TemplateString(source=text, segments=tuple(segments))


def resolve_path(value, path: Path):
    """Walk keys into maps and indexes into lists; returns ABSENT on any miss.

    When the container is a map, a digit step is a key lookup; indexing
    applies to lists only.
    """
    current = value
    for step in path.steps:
        if isinstance(current, dict):
            if step in current:
                current = current[step]
            else:
                return ABSENT
        elif isinstance(current, (list, tuple)) and step.isdigit():
            idx = int(step)
            if idx < len(current):
                current = current[idx]
            else:
                return ABSENT
        else:
            return ABSENT
    return current


def stringify(value) -> str:
    """Substitution text for a resolved value.

    Strings verbatim, numbers in their decimal form, booleans lowercase,
    null and absent empty. Containers serialize as JSON.
    """
    if value is ABSENT or value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, Decimal)):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    from . import jsontree

    return jsontree.dumps(value)


def _encode_url_component(text: str) -> str:
    return urllib.parse.quote(text, safe="")


def render_with_report(
    tpl: TemplateString,
    value,
    mode: str = "raw",
    strict: bool = False,
) -> tuple[str, list[Path]]:
    """Render and also report which placeholders resolved to absent.

    Nodes use the report to emit lenient-mode warnings; plain ``render``
    discards it.
    """
    if mode not in ("raw", "url_component"):
        raise ValueError(f"unknown render mode {mode!r}")
    out: list[str] = []
    missing: list[Path] = []
    for segment in tpl.segments:
        if isinstance(segment, str):
            out.append(segment)
            continue
        resolved = resolve_path(value, segment)
        if resolved is ABSENT:
            if strict:
                raise MissingValue(segment)
            missing.append(segment)
        text = stringify(resolved)
        if mode == "url_component":
            text = _encode_url_component(text)
        out.append(text)
    return "".join(out), missing


def render(tpl: TemplateString, value, mode: str = "raw", strict: bool = False) -> str:
    """Substitute placeholder values into the template.

    mode="url_component" percent-encodes each substituted value (literals
    pass through untouched). With strict=True an absent placeholder raises
    MissingValue; otherwise it becomes the empty string.
    """
    text, _ = render_with_report(tpl, value, mode=mode, strict=strict)
    return text


def bind_vars(tpl: TemplateString, flow_vars: dict) -> TemplateString:
    """Substitute ``vars.*`` placeholders with their literal text.

    Flow-level variables are resolved once at deploy time, before any
    message exists, so deployed templates never re-encode them (a base URL
    in a url_component template stays a base URL). Raises MissingValue for
    an undefined variable.
    """
    resolved: list[str | Path] = []
    for segment in tpl.segments:
        if isinstance(segment, Path) and segment.steps[0] == "vars":
            value = resolve_path({"vars": flow_vars}, segment)
            if value is ABSENT:
                raise MissingValue(segment)
            resolved.append(stringify(value))
        else:
            resolved.append(segment)
    merged: list[str | Path] = []
    for segment in resolved:
        if isinstance(segment, str) and merged and isinstance(merged[-1], str):
            merged[-1] = merged[-1] + segment
        else:
            merged.append(segment)
    if not merged:
        merged.append("")
    source = "".join(
        s if isinstance(s, str) else OPEN + str(s) + CLOSE for s in merged
    )
    return TemplateString(source=source, segments=tuple(merged))


def set_path(root: dict, path: Path, value) -> None:
    """Write ``value`` into a tree at ``path``, creating intermediate maps.

    A digit step writes into an existing list when one is there; otherwise
    maps are created along the way.
    """
    current: Any = root
    for step in path.steps[:-1]:
        if isinstance(current, list) and step.isdigit() and int(step) < len(current):
            nxt = current[int(step)]
        elif isinstance(current, dict):
            nxt = current.get(step)
        else:
            raise TypeError(f"cannot descend into {type(current).__name__} at {step!r}")
        if not isinstance(nxt, (dict, list)):
            nxt = {}
            if isinstance(current, list):
                current[int(step)] = nxt
            else:
                current[step] = nxt
        current = nxt
    last = path.steps[-1]
    if isinstance(current, list) and last.isdigit() and int(last) < len(current):
        current[int(last)] = value
    elif isinstance(current, dict):
        current[last] = value
    else:
        raise TypeError(f"cannot write into {type(current).__name__} at {last!r}")
