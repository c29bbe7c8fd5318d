"""Concrete PHP 8 value semantics over IR literals.

Used for constant folding during analysis.  Operations that would raise at
run time in PHP raise ``PhpRuntimeError`` here; callers treat the result as
an unknown value.
"""

from __future__ import annotations

import math
import re

from .ir import ArrayLit

INT_MAX = 2**63 - 1
INT_MIN = -2**63


class PhpRuntimeError(Exception):
    pass


_NUMERIC_RE = re.compile(
    r"[ \t\n\r\v\f]*[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?[ \t\n\r\v\f]*\Z")
_LEADING_RE = re.compile(r"[ \t\n\r\v\f]*[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


def _num_from_text(text: str):
    t = text.strip(" \t\n\r\v\f")
    if re.fullmatch(r"[+-]?[0-9]+", t):
        v = int(t)
        return v if INT_MIN <= v <= INT_MAX else float(v)
    return float(t)


def numeric_value(s: str):
    """Value of a fully numeric string, else None."""
    if _NUMERIC_RE.match(s):
        return _num_from_text(s)
    return None


def is_numeric_str(s: str) -> bool:
    return _NUMERIC_RE.match(s) is not None


def fmt_float(f: float, precision: int = 14) -> str:
    """PHP's float-to-string conversion (``%.<precision>G`` with PHP tweaks)."""
    if math.isnan(f):
        return "NAN"
    if math.isinf(f):
        return "INF" if f > 0 else "-INF"
    if f == 0:
        return "-0" if math.copysign(1, f) < 0 else "0"
    digits = f"{f:.{precision - 1}e}"
    mant, exp = digits.split("e")
    exp = int(exp)
    if exp < -4 or exp >= precision:
        mant = mant.rstrip("0").rstrip(".")
        if "." not in mant:
            mant += ".0"
        sign = "+" if exp >= 0 else "-"
        return f"{mant}E{sign}{abs(exp)}"
    out = f"{f:.{max(0, precision - 1 - exp)}f}"
    if "." in out:
        out = out.rstrip("0").rstrip(".")
    return out


def to_str(v) -> str:
    if v is None or v is False:
        return ""
    if v is True:
        return "1"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, str):
        return v
    if isinstance(v, ArrayLit):
        return "Array"
    raise PhpRuntimeError(f"cannot convert {type(v).__name__} to string")


def to_bool(v) -> bool:
    if v is None:
        return False
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        return v != 0
    if isinstance(v, str):
        return v not in ("", "0")
    if isinstance(v, ArrayLit):
        return len(v) > 0
    return True


def _float_to_int(f: float) -> int:
    if math.isnan(f) or math.isinf(f):
        return 0
    i = int(f)
    if INT_MIN <= i <= INT_MAX:
        return i
    # PHP 8 on 64-bit: out-of-range floats wrap modulo 2**64
    i = i % 2**64
    return i - 2**64 if i > INT_MAX else i


def str_prefix_number(s: str):
    """Leading-numeric prefix of a string, ``0`` if none (``(int)`` semantics)."""
    m = _LEADING_RE.match(s)
    if not m:
        return 0
    return _num_from_text(m.group(0))


def to_int(v) -> int:
    if v is None:
        return 0
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return _float_to_int(v)
    if isinstance(v, str):
        n = str_prefix_number(v)
        return _float_to_int(n) if isinstance(n, float) else n
    if isinstance(v, ArrayLit):
        return 1 if len(v) else 0
    raise PhpRuntimeError("bad int conversion")


def to_float(v) -> float:
    if isinstance(v, str):
        m = _LEADING_RE.match(v)
        return float(m.group(0)) if m else 0.0
    if isinstance(v, ArrayLit):
        return 1.0 if len(v) else 0.0
    if isinstance(v, float):
        return v
    return float(to_int(v))


def to_number(v, op: str = "+"):
    """Operand conversion for arithmetic."""
    if v is None:
        return 0
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        n = numeric_value(v)
        if n is not None:
            return n
        if _LEADING_RE.match(v):
            return str_prefix_number(v)       # leading-numeric: warning only
        raise PhpRuntimeError(f"Unsupported operand types: string {op} int")
    raise PhpRuntimeError("Unsupported operand types: array")


def _int_result(v):
    if isinstance(v, int) and not (INT_MIN <= v <= INT_MAX):
        return float(v)
    return v


def arith(op: str, a, b):
    if op == "+" and isinstance(a, ArrayLit) and isinstance(b, ArrayLit):
        items = list(a.items)
        keys = set(a.keys())
        items += [(k, x) for k, x in b.items if k not in keys]
        return ArrayLit(tuple(items))
    x, y = to_number(a, op), to_number(b, op)
    if op == "+":
        return _int_result(x + y) if isinstance(x, int) and isinstance(y, int) else float(x) + float(y)
    if op == "-":
        return _int_result(x - y) if isinstance(x, int) and isinstance(y, int) else float(x) - float(y)
    if op == "*":
        return _int_result(x * y) if isinstance(x, int) and isinstance(y, int) else float(x) * float(y)
    if op == "/":
        if y == 0:
            raise PhpRuntimeError("Division by zero")
        if isinstance(x, int) and isinstance(y, int) and x % y == 0:
            return _int_result(x // y)
        return float(x) / float(y)
    if op == "%":
        xi, yi = to_int(x), to_int(y)
        if yi == 0:
            raise PhpRuntimeError("Modulo by zero")
        r = abs(xi) % abs(yi)
        return -r if xi < 0 else r
    if op == "**":
        if isinstance(x, int) and isinstance(y, int) and y >= 0:
            return _int_result(x ** y)
        try:
            return float(x) ** float(y)
        except (OverflowError, ZeroDivisionError):
            raise PhpRuntimeError("pow overflow") from None
    raise PhpRuntimeError(f"unknown arithmetic operator {op}")


def _to_int_operand(v, op):
    n = to_number(v, op)
    return _float_to_int(n) if isinstance(n, float) else n


def bitwise(op: str, a, b=None):
    if op == "~":
        if isinstance(a, str):
            return "".join(chr(~ord(c) & 0xFF) for c in a)
        if isinstance(a, float):
            return _wrap(~_float_to_int(a))
        if isinstance(a, int) and not isinstance(a, bool):
            return _wrap(~a)
        raise PhpRuntimeError("Cannot perform bitwise not")
    if isinstance(a, str) and isinstance(b, str) and op in "|&^":
        if op == "|":
            n = max(len(a), len(b))
            a2, b2 = a.ljust(n, "\0"), b.ljust(n, "\0")
            return "".join(chr(ord(x) | ord(y)) for x, y in zip(a2, b2))
        fn = (lambda x, y: x & y) if op == "&" else (lambda x, y: x ^ y)
        return "".join(chr(fn(ord(x), ord(y))) for x, y in zip(a, b))
    x, y = _to_int_operand(a, op), _to_int_operand(b, op)
    if op == "|":
        return x | y
    if op == "&":
        return x & y
    if op == "^":
        return x ^ y
    if op == "<<":
        if y < 0:
            raise PhpRuntimeError("Bit shift by negative number")
        return 0 if y >= 64 else _wrap(x << y)
    if op == ">>":
        if y < 0:
            raise PhpRuntimeError("Bit shift by negative number")
        return (-1 if x < 0 else 0) if y >= 64 else x >> y
    raise PhpRuntimeError(f"unknown bitwise operator {op}")


def _wrap(i: int) -> int:
    i &= 2**64 - 1
    return i - 2**64 if i > INT_MAX else i


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


def compare(a, b) -> int:
    """PHP 8 loose comparison (``<=>``)."""
    if isinstance(a, str) and isinstance(b, str):
        na, nb = numeric_value(a), numeric_value(b)
        if na is not None and nb is not None:
            return _cmp(na, nb)
        return _cmp(a.encode("latin-1"), b.encode("latin-1"))
    if isinstance(a, bool) or isinstance(b, bool) or a is None and not isinstance(b, str) \
            or b is None and not isinstance(a, str):
        if a is None and isinstance(b, ArrayLit):
            return _cmp(0, len(b))
        if b is None and isinstance(a, ArrayLit):
            return _cmp(len(a), 0)
        return _cmp(to_bool(a), to_bool(b))
    if a is None:
        return _cmp(b"", to_str(b).encode("latin-1"))
    if b is None:
        return _cmp(to_str(a).encode("latin-1"), b"")
    if isinstance(a, ArrayLit) and isinstance(b, ArrayLit):
        if len(a) != len(b):
            return _cmp(len(a), len(b))
        for k, v in a.items:
            w = b.get(k, _MISSING)
            if w is _MISSING:
                return 1
            c = compare(v, w)
            if c:
                return c
        return 0
    if isinstance(a, ArrayLit):
        return 1
    if isinstance(b, ArrayLit):
        return -1
    if isinstance(a, str):
        return -compare(b, a)
    if isinstance(b, str):
        # number vs string
        nb = numeric_value(b)
        if nb is not None:
            return _cmp(a, nb)
        return _cmp(to_str(a).encode("latin-1"), b.encode("latin-1"))
    return _cmp(a, b)


_MISSING = object()


def loose_eq(a, b) -> bool:
    if isinstance(a, float) and math.isnan(a) or isinstance(b, float) and math.isnan(b):
        return False
    if isinstance(a, ArrayLit) and isinstance(b, ArrayLit):
        if len(a) != len(b):
            return False
        for k, v in a.items:
            w = b.get(k, _MISSING)
            if w is _MISSING or not loose_eq(v, w):
                return False
        return True
    if isinstance(a, ArrayLit) != isinstance(b, ArrayLit):
        other = b if isinstance(a, ArrayLit) else a
        if other is None or isinstance(other, bool):
            return to_bool(a) == to_bool(b)
        return False
    return compare(a, b) == 0


def strict_eq(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, ArrayLit):
        if len(a) != len(b):
            return False
        return all(ka == kb and strict_eq(va, vb) for (ka, va), (kb, vb) in zip(a.items, b.items))
    return a == b


def normalize_key(k):
    """PHP array-key normalization; raises for illegal key types."""
    if isinstance(k, bool):
        return int(k)
    if k is None:
        return ""
    if isinstance(k, float):
        if math.isnan(k) or math.isinf(k):
            return 0
        return _float_to_int(k)
    if isinstance(k, int):
        return k
    if isinstance(k, str):
        if re.fullmatch(r"0|-?[1-9][0-9]*", k):
            v = int(k)
            if INT_MIN <= v <= INT_MAX:
                return v
        return k
    raise PhpRuntimeError("Illegal offset type")


def cast(kind: str, v):
    if kind == "int":
        return to_int(v)
    if kind == "float":
        return to_float(v)
    if kind == "string":
        return to_str(v)
    if kind == "bool":
        return to_bool(v)
    if kind == "array":
        if isinstance(v, ArrayLit):
            return v
        return ArrayLit(()) if v is None else ArrayLit(((0, v),))
    raise PhpRuntimeError(f"unsupported cast {kind}")


def _str_increment(s: str) -> str:
    if s == "":
        return "1"
    chars = list(s)
    i = len(chars) - 1
    while i >= 0:
        c = chars[i]
        if c == "z":
            chars[i] = "a"
        elif c == "Z":
            chars[i] = "A"
        elif c == "9":
            chars[i] = "0"
        elif c.isascii() and (c.isalnum()):
            chars[i] = chr(ord(c) + 1)
            return "".join(chars)
        else:
            return "".join(chars)
        i -= 1
    first = s[0]
    lead = "1" if first.isdigit() else ("a" if first.islower() else "A")
    return lead + "".join(chars)


def increment(v):
    """``$v++`` value semantics."""
    if v is None:
        return 1
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return _int_result(v + 1)
    if isinstance(v, float):
        return v + 1
    if isinstance(v, str):
        n = numeric_value(v)
        if n is not None:
            return increment(n)
        return _str_increment(v)
    raise PhpRuntimeError("Cannot increment array")


def decrement(v):
    """``$v--`` value semantics."""
    if v is None or isinstance(v, bool):
        return v
    if isinstance(v, int):
        return _int_result(v - 1)
    if isinstance(v, float):
        return v - 1
    if isinstance(v, str):
        if v == "":
            return -1
        n = numeric_value(v)
        return decrement(n) if n is not None else v
    raise PhpRuntimeError("Cannot decrement array")
