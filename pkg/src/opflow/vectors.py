"""Byte-exact JSON encoding of PHP literals, shared by vector files and tests.

Strings are latin-1 byte strings (one char per byte) and travel as base64;
floats travel as the hex of their big-endian IEEE-754 bits.
"""

from __future__ import annotations

import base64
import math
import struct

from .ir import ArrayLit


def encode(v) -> dict:
    if v is None:
        return {"t": "null"}
    if isinstance(v, bool):
        return {"t": "bool", "v": v}
    if isinstance(v, int):
        return {"t": "int", "v": v}
    if isinstance(v, float):
        return {"t": "float", "hex": struct.pack(">d", v).hex()}
    if isinstance(v, str):
        return {"t": "str", "b64": base64.b64encode(v.encode("latin-1")).decode("ascii")}
    if isinstance(v, ArrayLit):
        return {"t": "array", "items": [[encode(k), encode(x)] for k, x in v.items]}
    raise TypeError(f"cannot encode {type(v).__name__}")


def decode(d: dict):
    t = d["t"]
    if t == "null":
        return None
    if t == "bool":
        return bool(d["v"])
    if t == "int":
        return int(d["v"])
    if t == "float":
        return struct.unpack(">d", bytes.fromhex(d["hex"]))[0]
    if t == "str":
        return base64.b64decode(d["b64"]).decode("latin-1")
    if t == "array":
        return ArrayLit(tuple((decode(k), decode(x)) for k, x in d["items"]))
    raise ValueError(f"unsupported encoded type {t!r}")


def php_literal(v) -> str:
    """PHP source text evaluating to ``v``."""
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return f"({v + 1}-1)" if v == -2**63 else str(v)
    if isinstance(v, float):
        if math.isfinite(v) and float(repr(v)) == v and "e" not in repr(v) and not (v == 0 and math.copysign(1, v) < 0):
            return repr(v)
        return f"unpack('E', hex2bin('{struct.pack('>d', v).hex()}'))[1]"
    if isinstance(v, str):
        return '"' + "".join(f"\\x{b:02x}" for b in v.encode("latin-1")) + '"'
    if isinstance(v, ArrayLit):
        return "[" + ", ".join(f"{php_literal(k)} => {php_literal(x)}" for k, x in v.items) + "]"
    raise TypeError(f"cannot render {type(v).__name__}")


def same(a, b) -> bool:
    """Exact equality of PHP literals (type, bytes, float bits, key order)."""
    return encode(a) == encode(b)
