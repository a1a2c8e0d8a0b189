"""Byte-stable text output helpers.

All floating-point values are printed with 17 significant digits, which
round-trips doubles exactly and keeps golden files byte-identical across
runs.  Files are written atomically (temp + rename).
"""

from __future__ import annotations

import math
import os
import tempfile


def format_float(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return "%.17g" % x


def _json_fragment(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_json_fragment(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(pad_in + it for it in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        import json as _json

        items = [
            _json.dumps(str(k)) + ": " + _json_fragment(v, indent, level + 1)
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(pad_in + it for it in items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def json_dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _json_fragment(obj, indent, 0) + "\n"


def atomic_write_text(path, text: str):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
