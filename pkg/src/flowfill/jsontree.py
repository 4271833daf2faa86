"""JSON tree values: parsing and deterministic serialization.

Everything that crosses a wire or a file boundary in this package is a
"tree value": None, bool, int, Decimal/float, str, list, or dict. Numbers
arriving as JSON text are parsed into Decimal so their decimal notation
survives a round trip (a slot value of 1.10 stays "1.10" instead of
collapsing to the nearest binary float). The emitter below is the single
place that turns trees back into bytes, so identical trees always produce
identical bytes.
"""

from __future__ import annotations

import copy
import json
import math
from decimal import Decimal
from typing import Any


class MalformedJSON(ValueError):
    """Input bytes are not valid UTF-8 JSON."""


def _reject_constant(name: str) -> Any:
    raise ValueError(f"non-finite number {name} is not valid JSON")


def loads(data: bytes | str):
    """Parse UTF-8 JSON into a tree value, keeping decimal number text.

    NaN/Infinity extensions are rejected.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJSON(f"body is not UTF-8: {exc}") from None
    try:
        return json.loads(data, parse_float=Decimal, parse_constant=_reject_constant)
    except ValueError as exc:
        raise MalformedJSON(str(exc)) from None


def dumps(value, *, sort_keys: bool = False, indent: int | None = None) -> str:
    """Serialize a tree value to deterministic JSON text.

    Decimal values emit their exact decimal notation; dict insertion order
    is kept unless sort_keys is set.
    """
    out: list[str] = []
    _emit(value, out, sort_keys, indent, 0)
    return "".join(out)


def dump_bytes(value, *, sort_keys: bool = False, indent: int | None = None) -> bytes:
    text = dumps(value, sort_keys=sort_keys, indent=indent)
    if indent is not None:
        text += "\n"
    return text.encode("utf-8")


def _emit(value, out: list[str], sort_keys: bool, indent: int | None, depth: int) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, Decimal):
        if not value.is_finite():
            raise ValueError(f"non-finite Decimal {value} is not serializable")
        out.append(str(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite float {value} is not serializable")
        out.append(repr(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, (list, tuple)):
        _emit_list(value, out, sort_keys, indent, depth)
    elif isinstance(value, dict):
        _emit_dict(value, out, sort_keys, indent, depth)
    else:
        raise TypeError(f"not a tree value: {type(value).__name__}")


def _emit_list(value, out: list[str], sort_keys: bool, indent: int | None, depth: int) -> None:
    if not value:
        out.append("[]")
        return
    sep, pad, close = _layout(indent, depth)
    out.append("[" + pad)
    for i, item in enumerate(value):
        if i:
            out.append(sep)
        _emit(item, out, sort_keys, indent, depth + 1)
    out.append(close + "]")


def _emit_dict(value: dict, out: list[str], sort_keys: bool, indent: int | None, depth: int) -> None:
    if not value:
        out.append("{}")
        return
    keys = sorted(value) if sort_keys else list(value)
    sep, pad, close = _layout(indent, depth)
    out.append("{" + pad)
    for i, key in enumerate(keys):
        if not isinstance(key, str):
            raise TypeError(f"non-string map key: {key!r}")
        if i:
            out.append(sep)
        out.append(json.dumps(key, ensure_ascii=False))
        out.append(": " if indent is not None else ":")
        _emit(value[key], out, sort_keys, indent, depth + 1)
    out.append(close + "}")


def _layout(indent: int | None, depth: int) -> tuple[str, str, str]:
    """Item separator, opening pad, and closing pad for one nesting level."""
    if indent is None:
        return ",", "", ""
    inner = "\n" + " " * (indent * (depth + 1))
    outer = "\n" + " " * (indent * depth)
    return "," + inner, inner, outer


def clone(value):
    """Deep copy of a tree value."""
    return copy.deepcopy(value)
