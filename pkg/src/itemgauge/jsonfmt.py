"""Canonical JSON emitter: fixed float formatting, insertion-order keys.

Floats are written with 17 significant digits, which round-trips every IEEE
double exactly, so serialize -> parse -> serialize is byte-identical.
"""

from __future__ import annotations

import json
import math
from typing import Mapping, Sequence


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite number {value!r}")
    if value == int(value) and abs(value) < 1e16:
        # Keep a decimal point so the value parses back as a float.
        return f"{value:.1f}"
    return format(value, ".17g")


def _emit(value, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_float(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, Mapping):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, item) in enumerate(value.items()):
            if not isinstance(key, str):
                raise ValueError(f"JSON object keys must be strings, got {key!r}")
            out.append(pad + "  " + json.dumps(key, ensure_ascii=False) + ": ")
            _emit(item, indent + 1, out)
            out.append(",\n" if i + 1 < len(value) else "\n")
        out.append(pad + "}")
    elif isinstance(value, Sequence):
        seq = list(value)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(seq):
            out.append(pad + "  ")
            _emit(item, indent + 1, out)
            out.append(",\n" if i + 1 < len(seq) else "\n")
        out.append(pad + "]")
    else:
        raise ValueError(f"cannot serialize value of type {type(value).__name__}")


def dumps(value) -> str:
    """Serialize to canonical pretty-printed JSON with a trailing newline."""
    out: list[str] = []
    _emit(value, 0, out)
    out.append("\n")
    return "".join(out)
