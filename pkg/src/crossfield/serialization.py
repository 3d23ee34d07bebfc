"""Canonical JSON serialization.

Every result the CLI or the HTTP service emits goes through
:func:`canonical_json` so that identical requests produce byte-identical
output: keys are sorted, floats are rendered with ``%.12g``, and no
locale- or insertion-order-dependent formatting is used.
"""

from fractions import Fraction

import numpy as np


def _format_float(x: float) -> str:
    if x != x:
        raise ValueError("NaN is not representable in canonical JSON")
    if x in (float("inf"), float("-inf")):
        raise ValueError("infinity is not representable in canonical JSON")
    if x == int(x) and abs(x) < 1e15:
        # keep integral floats readable and stable (avoids 1e+02 style)
        return f"{x:.1f}"
    return f"{x:.12g}"


def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def to_jsonable(obj):
    """Convert numpy scalars/arrays and Fractions to plain Python values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def canonical_json(obj) -> str:
    """Serialize ``obj`` deterministically (sorted keys, %.12g floats)."""
    obj = to_jsonable(obj)
    parts = []
    _write(obj, parts)
    return "".join(parts)


def _write(obj, parts):
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(_format_float(obj))
    elif isinstance(obj, str):
        parts.append('"' + _escape(obj) + '"')
    elif isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                parts.append(",")
            parts.append('"' + _escape(str(key)) + '":')
            _write(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, v in enumerate(obj):
            if i:
                parts.append(",")
            _write(v, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot canonically serialize {type(obj)!r}")
