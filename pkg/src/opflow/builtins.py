"""Built-in function models.

Each model has a taint rule, and optionally a concrete implementation over
literals, an abstract handler over analysis values, and declared effects.
Concrete implementations follow PHP 8.3 behavior; ``tests/vectors`` pins
them against output captured from the real interpreter.
"""

from __future__ import annotations

import base64
import enum
import hashlib
import html.entities
import itertools
import json
import math
import posixpath
import re
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import phpsem
from .ir import ArrayLit
from .phpsem import PhpRuntimeError, to_int, to_str
from .state import (ANY, APPEND, EMPTY, NULL, Arr, Env, Obj, Scalar, ScalarType, Source, Unknown,
                    arr_read, arr_write, combine_taint, deep_taint, join, lit, literal_choices,
                    scalar_of, to_literal)


class TaintRule(enum.Enum):
    PASS_ALL = "pass_all"     # result taint = union of argument taints
    PASS_ARG = "pass_arg"     # result taint = taint of one argument
    CLEAR = "clear"           # sanitizer or decoder; see RuleSet
    NONE = "none"             # result is never tainted


class NotConcrete(Exception):
    """A concrete implementation declines an input it does not model exactly."""


@dataclass(frozen=True)
class BuiltinModel:
    name: str
    taint_rule: TaintRule
    arg: int = 0
    concrete: Optional[Callable] = None
    abstract: Optional[Callable] = None
    rtype: str = "string"      # int, float, string, bool, array, mixed
    effect: Optional[str] = None
    byref: tuple = ()
    doc: str = ""


@dataclass
class CallCtx:
    """Arguments and environment seen by a built-in, plus the effects it requests."""
    name: str
    args: list
    env: Env
    consts: dict
    heap: dict
    out: dict = field(default_factory=dict)          # by-ref arg index -> new value
    scope_writes: dict = field(default_factory=dict)
    new_env: Optional[Env] = None
    defines: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def arg(self, i, default=None):
        return self.args[i] if i < len(self.args) else default

    def single(self, i):
        """The single literal value of argument i, or raise NotConcrete."""
        v = self.arg(i)
        if v is None:
            raise NotConcrete
        try:
            return to_literal(v)
        except ValueError:
            raise NotConcrete from None


# ====================================================================== strings

def _s(v):
    if isinstance(v, ArrayLit):
        raise PhpRuntimeError("Array to string conversion in string context")
    return to_str(v)


def _trim_chars(charlist: str) -> set:
    chars = set()
    i = 0
    while i < len(charlist):
        if charlist[i + 1:i + 3] == ".." and i + 3 < len(charlist):
            lo, hi = ord(charlist[i]), ord(charlist[i + 3])
            chars.update(chr(c) for c in range(lo, hi + 1))
            i += 4
        else:
            chars.add(charlist[i])
            i += 1
    return chars


_WS = " \t\n\r\0\x0b"


def php_trim(s, chars=_WS, mode="both"):
    s, cs = _s(s), _trim_chars(_s(chars))
    a, b = 0, len(s)
    if mode in ("both", "left"):
        while a < b and s[a] in cs:
            a += 1
    if mode in ("both", "right"):
        while b > a and s[b - 1] in cs:
            b -= 1
    return s[a:b]


def php_substr(s, start, length=None):
    s, start = _s(s), to_int(start)
    n = len(s)
    if start < 0:
        start = max(0, n + start)
    if start > n:
        return ""
    if length is None:
        return s[start:]
    length = to_int(length)
    if length < 0:
        end = n + length
        return s[start:end] if end > start else ""
    return s[start:start + length]


def _ascii_lower(s):
    return "".join(chr(ord(c) + 32) if "A" <= c <= "Z" else c for c in s)


def _ascii_upper(s):
    return "".join(chr(ord(c) - 32) if "a" <= c <= "z" else c for c in s)


def php_ucwords(s, delims=" \t\r\n\f\v"):
    s, delims = _s(s), _s(delims)
    out, cap = [], True
    for c in s:
        out.append(_ascii_upper(c) if cap else c)
        cap = c in delims
    return "".join(out)


def _replace_one(subject, search, replace):
    if search == "":
        return subject, 0
    return subject.replace(search, replace), subject.count(search)


def php_str_replace(search, replace, subject):
    def on_string(subj):
        subj = _s(subj)
        if isinstance(search, ArrayLit):
            reps = replace.values() if isinstance(replace, ArrayLit) else None
            for i, srch in enumerate(search.values()):
                if reps is None:
                    rep = _s(replace)
                else:
                    rep = _s(reps[i]) if i < len(reps) else ""
                subj, _ = _replace_one(subj, _s(srch), rep)
            return subj
        if isinstance(replace, ArrayLit):
            raise PhpRuntimeError("str_replace(): Argument #2 must be of type string")
        return _replace_one(subj, _s(search), _s(replace))[0]

    if isinstance(subject, ArrayLit):
        return ArrayLit(tuple((k, v if isinstance(v, ArrayLit) else on_string(v))
                              for k, v in subject.items))
    return on_string(subject)


def php_explode(sep, s, limit=None):
    sep, s = _s(sep), _s(s)
    if sep == "":
        raise PhpRuntimeError("explode(): Argument #1 must not be empty")
    parts = s.split(sep)
    if limit is not None:
        limit = to_int(limit)
        if limit > 0:
            parts = s.split(sep, limit - 1)
        elif limit < 0:
            parts = parts[:limit]
        else:
            parts = [s]
    return ArrayLit.from_list(parts)


def php_implode(a, b=None):
    if b is None:
        if not isinstance(a, ArrayLit):
            raise PhpRuntimeError("implode(): Argument #1 must be of type array")
        sep, arr = "", a
    elif isinstance(a, ArrayLit):
        sep, arr = _s(b), a
    elif isinstance(b, ArrayLit):
        sep, arr = _s(a), b
    else:
        raise PhpRuntimeError("implode(): Argument #2 must be of type ?array")
    return sep.join("Array" if isinstance(v, ArrayLit) else to_str(v) for v in arr.values())


def php_str_pad(s, length, pad=" ", kind=1):
    s, length, pad, kind = _s(s), to_int(length), _s(pad), to_int(kind)
    if pad == "":
        raise PhpRuntimeError("str_pad(): Argument #3 must be a non-empty string")
    total = length - len(s)
    if total <= 0:
        return s
    if kind == 0:
        left, right = total, 0
    elif kind == 2:
        left = total // 2
        right = total - left
    else:
        left, right = 0, total

    def fill(n):
        return (pad * (n // len(pad) + 1))[:n]
    return fill(left) + s + fill(right)


def php_strpos(h, n, offset=0):
    h, n, offset = _s(h), _s(n), to_int(offset)
    if offset < 0:
        offset += len(h)
    if offset < 0 or offset > len(h):
        raise PhpRuntimeError("strpos(): Argument #3 must be contained in argument #1")
    i = h.find(n, offset)
    return False if i < 0 else i


def php_nl2br(s):
    s = _s(s)
    out, i = [], 0
    while i < len(s):
        c = s[i]
        if c in "\r\n":
            pair = s[i:i + 2]
            if pair in ("\r\n", "\n\r"):
                out.append("<br />" + pair)
                i += 2
                continue
            out.append("<br />" + c)
        else:
            out.append(c)
        i += 1
    return "".join(out)


def php_str_split(s, n=1):
    s, n = _s(s), to_int(n)
    if n < 1:
        raise PhpRuntimeError("str_split(): Argument #2 must be greater than 0")
    return ArrayLit.from_list([s[i:i + n] for i in range(0, len(s), n)])


def php_str_repeat(s, n):
    n = to_int(n)
    if n < 0:
        raise PhpRuntimeError("str_repeat(): Argument #2 must be greater than or equal to 0")
    if n * len(_s(s)) > 1 << 20:
        raise NotConcrete
    return _s(s) * n


# ---------------------------------------------------------------- sprintf

def php_sprintf(fmt, *args):
    fmt = _s(fmt)
    out, pos, argi = [], 0, 0
    spec_re = re.compile(r"%(?:(\d+)\$)?((?:[-+ 0]|'.)*)(\d+)?(?:\.(\d+))?(.)", re.S)
    while True:
        i = fmt.find("%", pos)
        if i < 0:
            out.append(fmt[pos:])
            break
        out.append(fmt[pos:i])
        m = spec_re.match(fmt, i)
        if not m:
            raise PhpRuntimeError("Missing format specifier at end of string")
        argnum, flags, width, prec, conv = m.groups()
        pos = m.end()
        if conv == "%":
            out.append("%")
            continue
        if conv not in "bcdeEfFgGosuxX":
            raise PhpRuntimeError(f"Unknown format specifier \"{conv}\"")
        if argnum is not None:
            idx = int(argnum) - 1
        else:
            idx = argi
            argi += 1
        if idx >= len(args):
            raise PhpRuntimeError(f"{idx + 2} arguments are required, {len(args) + 1} given")
        out.append(_format_one(args[idx], flags or "", width, prec, conv))
    return "".join(out)


def _format_one(v, flags, width, prec, conv):
    left, plus, pad_char = False, False, " "
    i = 0
    while i < len(flags):
        c = flags[i]
        if c == "-":
            left = True
        elif c == "+":
            plus = True
        elif c == "0":
            pad_char = "0"
        elif c == " ":
            pad_char = " "
        elif c == "'":
            pad_char = flags[i + 1]
            i += 1
        i += 1
    width = int(width) if width else 0
    if conv == "s":
        s = to_str(v) if not isinstance(v, ArrayLit) else "Array"
        if prec is not None:
            s = s[:int(prec)]
    elif conv == "d":
        n = to_int(v)
        s = str(abs(n))
        sign = "-" if n < 0 else ("+" if plus else "")
        if pad_char == "0" and not left:
            s = sign + s.rjust(width - len(sign), "0")
            return s
        s = sign + s
    elif conv == "u":
        n = to_int(v)
        s = str(n if n >= 0 else n + 2**64)
    elif conv in "xXob":
        n = to_int(v)
        if n < 0:
            n += 2**64
        s = {"x": "x", "X": "X", "o": "o", "b": "b"}[conv]
        s = format(n, s)
    elif conv == "c":
        return chr(to_int(v) & 0xFF)
    elif conv in "eEfFgG":
        f = phpsem.to_float(v)
        p = 6 if prec is None else int(prec)
        if conv in "fF":
            s = f"{abs(f):.{p}f}"
        elif conv in "eE":
            s = _php_exp(abs(f), p, conv)
        else:
            s = phpsem.fmt_float(abs(f), p or 1)
            if conv == "G":
                s = s.upper()
            else:
                s = s.replace("E", "e")
        sign = "-" if f < 0 else ("+" if plus else "")
        if pad_char == "0" and not left:
            return sign + s.rjust(width - len(sign), "0")
        s = sign + s
    if len(s) < width:
        s = s.ljust(width, " " if pad_char == "0" else pad_char) if left else s.rjust(width, pad_char)
    return s


def _php_exp(f, p, conv):
    s = f"{f:.{p}e}"
    mant, exp = s.split("e")
    e = int(exp)
    return f"{mant}{'e' if conv == 'e' else 'E'}{'+' if e >= 0 else '-'}{abs(e)}"


# ---------------------------------------------------------------- html / url / base64

def _utf8_substitute(s: str) -> str:
    b = s.encode("latin-1")
    return b.decode("utf-8", errors="replace").encode("utf-8").decode("latin-1")


def _invalid_utf8(s: str) -> bool:
    try:
        s.encode("latin-1").decode("utf-8")
        return False
    except UnicodeDecodeError:
        return True


_ENT_HTML_QUOTE_SINGLE, _ENT_HTML_QUOTE_DOUBLE, _ENT_SUBSTITUTE = 1, 2, 8
_DOCTYPE_MASK, _DOCTYPE_HTML401 = 48, 0
_NUMERIC_ENT_RE = re.compile(r"#(?:[xX]([0-9a-fA-F]+)|([0-9]+));")
_NAMED_ENT_RE = re.compile(r"([a-zA-Z0-9]+);")


def _valid_entity_at(s: str, i: int) -> int:
    """Length of a well-formed HTML 4.01 entity body after the ``&`` at ``i``, else 0."""
    m = _NUMERIC_ENT_RE.match(s, i + 1)
    if m:
        code = int(m.group(1), 16) if m.group(1) else int(m.group(2))
        return m.end() - i - 1 if code <= 0x10FFFF else 0
    m = _NAMED_ENT_RE.match(s, i + 1)
    if m and m.group(1) in html.entities.name2codepoint:
        return m.end() - i - 1
    return 0


def _html_encode(s, flags, double_encode, all_entities: bool) -> str:
    s, flags = _s(s), to_int(flags)
    if all_entities and flags & _DOCTYPE_MASK != _DOCTYPE_HTML401:
        raise NotConcrete
    if flags & _ENT_SUBSTITUTE:
        s = _utf8_substitute(s)
    elif _invalid_utf8(s):
        return ""
    keep_entities = double_encode is not None and not phpsem.to_bool(double_encode)
    apos = "&#039;" if flags & _DOCTYPE_MASK == _DOCTYPE_HTML401 else "&apos;"
    text = s.encode("latin-1").decode("utf-8")
    out, i = [], 0
    while i < len(text):
        c = text[i]
        if c == "&":
            n = _valid_entity_at(text, i) if keep_entities else 0
            out.append(text[i:i + 1 + n] if n else "&amp;")
            i += 1 + n
            continue
        if c == "<":
            out.append("&lt;")
        elif c == ">":
            out.append("&gt;")
        elif c == '"':
            out.append("&quot;" if flags & _ENT_HTML_QUOTE_DOUBLE else c)
        elif c == "'":
            out.append(apos if flags & _ENT_HTML_QUOTE_SINGLE else c)
        elif all_entities and ord(c) in html.entities.codepoint2name:
            out.append(f"&{html.entities.codepoint2name[ord(c)]};")
        else:
            out.append(c)
        i += 1
    return "".join(out).encode("utf-8").decode("latin-1")


def php_htmlspecialchars(s, flags=3 | 8, encoding=None, double_encode=True):
    return _html_encode(s, flags, double_encode, all_entities=False)


def php_htmlentities(s, flags=3 | 8, encoding=None, double_encode=True):
    return _html_encode(s, flags, double_encode, all_entities=True)


_DECODE_BASIC = {"&amp;": "&", "&lt;": "<", "&gt;": ">"}


def php_htmlspecialchars_decode(s, flags=3 | 8):
    s, flags = _s(s), to_int(flags)
    html5_or_xml = (flags & 48) != 0

    def repl(m):
        ent = m.group(0)
        if ent in _DECODE_BASIC:
            return _DECODE_BASIC[ent]
        if ent == "&quot;":
            return '"' if flags & 2 else ent
        if ent == "&apos;":
            return "'" if (flags & 3) == 3 and html5_or_xml else ent
        num = m.group(1)
        if num is not None:
            code = int(num[1:], 16) if num[0] in "xX" else int(num)
            ch = chr(code) if code < 0x110000 else ""
            if ch == "'" and (flags & 3) == 3:
                return ch
            if ch == '"' and flags & 2:
                return ch
            if ch in "&<>":
                return ch
        return ent
    return re.sub(r"&(?:#([0-9]+|[xX][0-9a-fA-F]+);|[a-zA-Z]+;)", repl, s)


def _html401_cp_allowed(cp: int) -> bool:
    return (0x20 <= cp <= 0x7E or cp in (0x09, 0x0A, 0x0D) or 0xA0 <= cp <= 0xD7FF
            or 0xE000 <= cp <= 0x10FFFF)


def php_html_entity_decode(s, flags=3 | 8, encoding=None):
    s, flags = _s(s), to_int(flags)
    if flags & _DOCTYPE_MASK != _DOCTYPE_HTML401:
        raise NotConcrete

    def quote_ok(cp):
        if cp == 0x27:
            return bool(flags & _ENT_HTML_QUOTE_SINGLE)
        if cp == 0x22:
            return bool(flags & _ENT_HTML_QUOTE_DOUBLE)
        return True

    def repl(m):
        if m.group(3) is not None:
            cp = html.entities.name2codepoint.get(m.group(3))
            if cp is None:
                return m.group(0)
        else:
            cp = int(m.group(1), 16) if m.group(1) else int(m.group(2))
            if not _html401_cp_allowed(cp):
                return m.group(0)
        if not quote_ok(cp):
            return m.group(0)
        return chr(cp).encode("utf-8").decode("latin-1")
    return re.sub(r"&(?:#(?:[xX]([0-9a-fA-F]+)|([0-9]+));|([a-zA-Z0-9]+);)", repl, s)


_URL_SAFE = set(b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_.")


def php_urlencode(s, raw=False):
    out = []
    for b in _s(s).encode("latin-1"):
        if b in _URL_SAFE or (raw and b == ord("~")):
            out.append(chr(b))
        elif b == 0x20 and not raw:
            out.append("+")
        else:
            out.append(f"%{b:02X}")
    return "".join(out)


def php_urldecode(s, raw=False):
    s = _s(s)
    out, i = [], 0
    while i < len(s):
        c = s[i]
        if c == "+" and not raw:
            out.append(" ")
        elif c == "%" and re.fullmatch(r"[0-9a-fA-F]{2}", s[i + 1:i + 3]):
            out.append(chr(int(s[i + 1:i + 3], 16)))
            i += 3
            continue
        else:
            out.append(c)
        i += 1
    return "".join(out)


def php_base64_encode(s):
    return base64.b64encode(_s(s).encode("latin-1")).decode("ascii")


_B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"


def php_base64_decode(s, strict=False):
    s, strict = _s(s), strict is not None and phpsem.to_bool(strict)
    bits, nbits, out = 0, 0, bytearray()
    count = padding = 0
    for c in s:
        if c == "=":
            padding += 1
            continue
        i = _B64.find(c)
        if i < 0:
            if strict and c not in " \t\r\n":
                return False
            continue
        if strict and padding:
            return False
        count += 1
        bits = (bits << 6) | i
        nbits += 6
        if nbits >= 8:
            nbits -= 8
            out.append((bits >> nbits) & 0xFF)
    if strict and (count % 4 == 1 or (padding and (padding > 2 or (count + padding) % 4))):
        return False
    return out.decode("latin-1")


def php_addslashes(s):
    out = []
    for c in _s(s):
        if c in "'\"\\":
            out.append("\\" + c)
        elif c == "\0":
            out.append("\\0")
        else:
            out.append(c)
    return "".join(out)


def php_stripslashes(s):
    s = _s(s)
    out, i = [], 0
    while i < len(s):
        c = s[i]
        if c == "\\":
            if i + 1 < len(s):
                nxt = s[i + 1]
                out.append("\0" if nxt == "0" else nxt)
                i += 2
                continue
            i += 1
            continue
        out.append(c)
        i += 1
    return "".join(out)


def php_intval(v, base=10):
    base = to_int(base)
    if base == 10 or not isinstance(v, str):
        return to_int(v)
    s = v.strip(" \t\n\r\v\f")
    neg = s.startswith("-")
    if s[:1] in "+-":
        s = s[1:]
    if base == 0:
        if s[:2].lower() == "0x":
            base, s = 16, s[2:]
        elif s[:2].lower() == "0b":
            base, s = 2, s[2:]
        elif s[:1] == "0" and len(s) > 1:
            base, s = 8, s[1:]
        else:
            base = 10
    elif base == 16 and s[:2].lower() == "0x":
        s = s[2:]
    elif base == 2 and s[:2].lower() == "0b":
        s = s[2:]
    elif base == 8 and s[:2].lower() == "0o":
        s = s[2:]
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"[:base]
    n, any_digit = 0, False
    for c in s.lower():
        if c not in digits:
            break
        n = n * base + digits.index(c)
        any_digit = True
    if not any_digit:
        return 0
    n = -n if neg else n
    return max(phpsem.INT_MIN, min(phpsem.INT_MAX, n))


def php_dirname(path, levels=1):
    path, levels = _s(path), to_int(levels)
    for _ in range(levels):
        if path == "":
            return ""
        stripped = path.rstrip("/")
        if stripped == "":
            return "/"
        i = stripped.rfind("/")
        if i < 0:
            path = "."
            continue
        path = stripped[:i].rstrip("/") or "/"
    return path


def php_basename(path, suffix=""):
    path, suffix = _s(path), _s(suffix)
    stripped = path.rstrip("/")
    base = stripped[stripped.rfind("/") + 1:] if stripped else ""
    if suffix and base.endswith(suffix) and base != suffix:
        base = base[:-len(suffix)]
    return base


# ---------------------------------------------------------------- json

class _JsonError(Exception):
    """The value cannot be encoded; json_encode() returns false."""


_JSON_HEX_TAG, _JSON_HEX_AMP, _JSON_HEX_APOS, _JSON_HEX_QUOT = 1, 2, 4, 8
_JSON_FORCE_OBJECT, _JSON_UNESCAPED_SLASHES, _JSON_UNESCAPED_UNICODE = 16, 64, 256
_JSON_PRESERVE_ZERO_FRACTION, _JSON_UNESCAPED_LINE_TERMINATORS = 1024, 2048
_JSON_SUPPORTED = (_JSON_HEX_TAG | _JSON_HEX_AMP | _JSON_HEX_APOS | _JSON_HEX_QUOT
                   | _JSON_FORCE_OBJECT | _JSON_UNESCAPED_SLASHES | _JSON_UNESCAPED_UNICODE
                   | _JSON_PRESERVE_ZERO_FRACTION | _JSON_UNESCAPED_LINE_TERMINATORS)
_JSON_SHORT = {'"': '\\"', "\\": "\\\\", "\b": "\\b", "\f": "\\f", "\n": "\\n",
               "\r": "\\r", "\t": "\\t"}
_JSON_HEX = {"<": _JSON_HEX_TAG, ">": _JSON_HEX_TAG, "&": _JSON_HEX_AMP,
             "'": _JSON_HEX_APOS, '"': _JSON_HEX_QUOT}


def _json_str(s: str, flags: int) -> str:
    try:
        text = s.encode("latin-1").decode("utf-8")
    except UnicodeDecodeError:
        raise _JsonError from None
    out = ['"']
    for ch in text:
        o = ord(ch)
        if ch in _JSON_HEX and flags & _JSON_HEX[ch]:
            out.append(f"\\u{o:04X}")
        elif ch in _JSON_SHORT:
            out.append(_JSON_SHORT[ch])
        elif ch == "/":
            out.append("/" if flags & _JSON_UNESCAPED_SLASHES else "\\/")
        elif o < 0x20:
            out.append(f"\\u{o:04x}")
        elif o > 0x7F and (not flags & _JSON_UNESCAPED_UNICODE or (
                o in (0x2028, 0x2029) and not flags & _JSON_UNESCAPED_LINE_TERMINATORS)):
            if o > 0xFFFF:
                o -= 0x10000
                out.append(f"\\u{0xD800 + (o >> 10):04x}\\u{0xDC00 + (o & 0x3FF):04x}")
            else:
                out.append(f"\\u{o:04x}")
        else:
            out.append(ch.encode("utf-8").decode("latin-1"))
    out.append('"')
    return "".join(out)


def _json_float(f: float, flags: int) -> str:
    if math.isnan(f) or math.isinf(f):
        raise _JsonError
    r = repr(f)
    if "e" in r or "E" in r:
        mant, exp = r.split("e")
        if "." not in mant:
            mant += ".0"
        e = int(exp)
        return f"{mant}e{'+' if e >= 0 else '-'}{abs(e)}"
    if r.endswith(".0") and not flags & _JSON_PRESERVE_ZERO_FRACTION:
        r = r[:-2]
    return r


def php_json_encode(v, flags=0):
    flags = to_int(flags)
    if flags & ~_JSON_SUPPORTED:
        raise NotConcrete
    try:
        return _json_enc(v, flags)
    except _JsonError:
        return False


def _json_enc(v, flags):
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _json_float(v, flags)
    if isinstance(v, str):
        return _json_str(v, flags)
    keys = v.keys()
    if keys == list(range(len(keys))) and not flags & _JSON_FORCE_OBJECT:
        return "[" + ",".join(_json_enc(x, flags) for x in v.values()) + "]"
    return "{" + ",".join(f"{_json_str(str(k), flags)}:{_json_enc(x, flags)}"
                          for k, x in v.items) + "}"


def php_json_decode(s, assoc=None):
    s = _s(s)
    try:
        text = s.encode("latin-1").decode("utf-8")
    except UnicodeDecodeError:
        return None
    if text.strip() == "":
        return None

    def bad_const(_):
        raise ValueError("constant")

    def obj(pairs):
        if not (assoc is not None and phpsem.to_bool(assoc)):
            raise NotConcrete
        d = {}
        for k, x in pairs:
            d[phpsem.normalize_key(k.encode("utf-8").decode("latin-1"))] = x
        return ArrayLit(tuple(d.items()))

    def num_int(t):
        n = int(t)
        return n if phpsem.INT_MIN <= n <= phpsem.INT_MAX else float(t)

    try:
        val = json.loads(text, object_pairs_hook=obj, parse_constant=bad_const,
                         parse_int=num_int)
    except (ValueError, RecursionError):
        return None
    return _from_json(val)


def _from_json(v):
    if isinstance(v, str):
        return v.encode("utf-8").decode("latin-1")
    if isinstance(v, list):
        return ArrayLit.from_list([_from_json(x) for x in v])
    if isinstance(v, ArrayLit):
        return ArrayLit(tuple((k, _from_json(x)) for k, x in v.items))
    return v


# ---------------------------------------------------------------- parse_str

def php_parse_str(s):
    result = ArrayLit(())
    for pair in _s(s).split("&"):
        if pair == "":
            continue
        k, _, v = pair.partition("=")
        k, v = php_urldecode(k), php_urldecode(v)
        base, subkeys = _split_var_name(k)
        if base == "":
            continue
        result = _assign_nested(result, [base] + subkeys, v)
    return result


def _split_var_name(name: str):
    name = name.lstrip(" ")
    i = name.find("[")
    subkeys = []
    if i > 0:
        rest = name[i:]
        base = name[:i]
        j = 0
        ok_any = False
        while j < len(rest) and rest[j] == "[":
            close = rest.find("]", j + 1)
            if close < 0:
                if not ok_any:
                    base = base + "_" + rest[j + 1:]
                break
            subkeys.append(rest[j + 1:close])
            ok_any = True
            j = close + 1
    else:
        base = name
    base = "".join("_" if c in " ." else c for c in base)
    return base, subkeys


def _assign_nested(arr: ArrayLit, keys, value):
    k = keys[0]
    if k == "":
        ints = [x for x in arr.keys() if isinstance(x, int)]
        key = max(ints) + 1 if ints else 0
    else:
        key = phpsem.normalize_key(k)
    if len(keys) == 1:
        new = value
    else:
        cur = arr.get(key)
        new = _assign_nested(cur if isinstance(cur, ArrayLit) else ArrayLit(()), keys[1:], value)
    if key in arr.keys():
        return ArrayLit(tuple((x, new if x == key else y) for x, y in arr.items))
    return ArrayLit(arr.items + ((key, new),))


# ====================================================================== arrays (concrete)

def _arr(v, fn):
    if not isinstance(v, ArrayLit):
        raise PhpRuntimeError(f"{fn}(): Argument #1 must be of type array")
    return v


def php_array_pad(a, n, v):
    a, n = _arr(a, "array_pad"), to_int(n)
    vals = a.items
    missing = abs(n) - len(vals)
    if missing <= 0:
        return a
    if missing > 4096:
        raise NotConcrete
    pads = [(None, v)] * missing
    return _renumber(list(vals) + pads if n > 0 else pads + list(vals))


def _renumber(items):
    """Renumber integer keys from zero, keeping string keys."""
    out, nxt = [], 0
    for k, v in items:
        if isinstance(k, str):
            out.append((k, v))
        else:
            out.append((nxt, v))
            nxt += 1
    return ArrayLit(tuple(out)) if items is not None else ArrayLit(())


def php_array_merge(*arrays):
    items = []
    for a in arrays:
        _arr(a, "array_merge")
        for k, v in a.items:
            if isinstance(k, str):
                items = [(x, y) for x, y in items if x != k]
                items.append((k, v))
            else:
                items.append((None, v))
    return _renumber(items)


def php_array_keys(a, *search):
    a = _arr(a, "array_keys")
    if not search:
        return ArrayLit.from_list(a.keys())
    needle = search[0]
    eq = phpsem.strict_eq if len(search) > 1 and phpsem.to_bool(search[1]) else phpsem.loose_eq
    return ArrayLit.from_list([k for k, v in a.items if eq(v, needle)])


def php_array_values(a):
    return ArrayLit.from_list(_arr(a, "array_values").values())


def php_count(a, mode=0):
    if not isinstance(a, ArrayLit):
        raise PhpRuntimeError("count(): Argument #1 must be of type Countable|array")
    if to_int(mode) == 1:
        return sum(1 + (php_count(v, 1) if isinstance(v, ArrayLit) else 0) for v in a.values())
    return len(a)


def php_in_array(needle, hay, strict=False):
    hay = _arr(hay, "in_array")
    eq = phpsem.strict_eq if phpsem.to_bool(strict) else phpsem.loose_eq
    return any(eq(needle, v) for v in hay.values())


def php_array_search(needle, hay, strict=False):
    hay = _arr(hay, "array_search")
    eq = phpsem.strict_eq if phpsem.to_bool(strict) else phpsem.loose_eq
    for k, v in hay.items:
        if eq(needle, v):
            return k
    return False


def php_array_key_exists(key, a):
    a = _arr(a, "array_key_exists")
    return phpsem.normalize_key(key) in a.keys()


def php_array_slice(a, offset, length=None, preserve=False):
    a = _arr(a, "array_slice")
    n = len(a)
    off = to_int(offset)
    if off < 0:
        off = max(0, n + off)
    off = min(off, n)
    if length is None:
        end = n
    else:
        ln = to_int(length)
        end = off + ln if ln >= 0 else n + ln
    items = list(a.items[off:max(off, end)])
    if phpsem.to_bool(preserve):
        return ArrayLit(tuple(items))
    return _renumber(items)


def php_array_reverse(a, preserve=False):
    items = list(reversed(_arr(a, "array_reverse").items))
    if phpsem.to_bool(preserve):
        return ArrayLit(tuple(items))
    return _renumber(items)


def php_array_flip(a):
    out = {}
    for k, v in _arr(a, "array_flip").items:
        if isinstance(v, (int, str)) and not isinstance(v, bool):
            out[phpsem.normalize_key(v)] = k
    return ArrayLit(tuple(out.items()))


def php_array_combine(keys, values):
    keys, values = _arr(keys, "array_combine"), _arr(values, "array_combine")
    if len(keys) != len(values):
        raise PhpRuntimeError("array_combine(): Argument #1 and argument #2 must have the same number of elements")
    out = {}
    for k, v in zip(keys.values(), values.values()):
        key = phpsem.normalize_key(to_str(k) if not isinstance(k, (int, str)) else k)
        out.pop(key, None)
        out[key] = v
    return ArrayLit(tuple(out.items()))


def php_array_fill(start, num, v):
    start, num = to_int(start), to_int(num)
    if num < 0 or num > 4096:
        raise NotConcrete
    return ArrayLit(tuple((start + i, v) for i in range(num)))


_RANGE_LIMIT = 4096


def _range_input(v):
    """Classify a range() bound as ("char", byte), ("digit", int) or ("num", number)."""
    if isinstance(v, bool) or v is None or isinstance(v, ArrayLit):
        raise NotConcrete
    if isinstance(v, (int, float)):
        return "num", v
    if v == "":
        return "num", 0
    n = phpsem.numeric_value(v)
    if n is not None:
        return ("digit", n) if len(v) == 1 else ("num", n)
    return "char", ord(v[0])


def _range_step(step):
    if isinstance(step, str):
        step = phpsem.numeric_value(step)
        if step is None:
            raise NotConcrete
    if isinstance(step, bool) or not isinstance(step, (int, float)):
        raise NotConcrete
    if isinstance(step, float) and step.is_integer() and abs(step) < 2**63:
        return int(step)
    return step


def php_range(lo, hi, step=1):
    (lk, lv), (hk, hv) = _range_input(lo), _range_input(hi)
    step = _range_step(step)
    chars = lk != "num" and hk != "num"
    if chars:
        lv, hv = ord(lo[0]), ord(hi[0])
    if chars and isinstance(step, float):
        lv = hv = 0
        chars = False
    elif not chars:
        lv = 0 if lk == "char" else lv
        hv = 0 if hk == "char" else hv
    if isinstance(step, float) and math.isnan(step):
        raise NotConcrete
    if step == 0:
        raise PhpRuntimeError("range(): Argument #3 ($step) cannot be 0")
    if lv < hv and step < 0:
        raise PhpRuntimeError("range(): Argument #3 ($step) must be greater than 0 for increasing ranges")
    step = abs(step)
    span = abs(hv - lv)
    if span and step > span:
        raise PhpRuntimeError("range(): Argument #3 ($step) must be less than the range spanned "
                              "by argument #1 ($start) and argument #2 ($end)")
    sign = 1 if hv >= lv else -1
    if chars:
        return ArrayLit.from_list([chr(lv + sign * i * step) for i in range(span // step + 1)])
    if span / step > _RANGE_LIMIT:
        raise NotConcrete
    if isinstance(lv, float) or isinstance(hv, float) or isinstance(step, float):
        lv = float(lv)
    return ArrayLit.from_list([lv + sign * i * step for i in range(math.floor(span / step) + 1)])


def php_array_sum(a):
    total = 0
    for v in _arr(a, "array_sum").values():
        if isinstance(v, ArrayLit):
            continue
        total = phpsem.arith("+", total, v if not isinstance(v, str) else phpsem.str_prefix_number(v))
    return total


def php_max(*args):
    vals = list(args[0].values()) if len(args) == 1 and isinstance(args[0], ArrayLit) else list(args)
    if not vals:
        raise PhpRuntimeError("max(): Argument #1 must contain at least one element")
    best = vals[0]
    for v in vals[1:]:
        if phpsem.compare(v, best) > 0:
            best = v
    return best


def php_min(*args):
    vals = list(args[0].values()) if len(args) == 1 and isinstance(args[0], ArrayLit) else list(args)
    if not vals:
        raise PhpRuntimeError("min(): Argument #1 must contain at least one element")
    best = vals[0]
    for v in vals[1:]:
        if phpsem.compare(v, best) < 0:
            best = v
    return best


def php_abs(v):
    n = phpsem.to_number(v)
    if isinstance(n, int):
        return -n if n < 0 and n != phpsem.INT_MIN else (float(-n) if n < 0 else n)
    return abs(n)


def php_gettype(v):
    if v is None:
        return "NULL"
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, int):
        return "integer"
    if isinstance(v, float):
        return "double"
    if isinstance(v, str):
        return "string"
    return "array"


def php_is_numeric(v):
    if isinstance(v, bool) or v is None:
        return False
    if isinstance(v, (int, float)):
        return True
    if isinstance(v, str):
        return phpsem.numeric_value(v) is not None
    return False


# ====================================================================== abstract handlers

def _taint_of(ctx, *idx):
    parts = [deep_taint(ctx.arg(i), ctx.heap) for i in idx if ctx.arg(i) is not None]
    return combine_taint(parts)


def _unknown_array(taint=(EMPTY, ())):
    t, s = taint
    return Arr((), None, Unknown(t, s) if t else Scalar(ScalarType.UNKNOWN))


def h_array_pad(ctx):
    a, n, v = ctx.arg(0), ctx.arg(1), ctx.arg(2)
    if isinstance(a, Arr) and a.default is None and a.next_index is not None \
            and isinstance(n, Scalar) and n.is_single and v is not None:
        size = to_int(n.concrete)
        items = list(a.elems)
        missing = abs(size) - len(items)
        if missing <= 0:
            return a
        if missing <= 4096:
            vals = [x for _, x in items]
            keys = [k for k, _ in items]
            if all(isinstance(k, int) for k in keys):
                seq = vals + [v] * missing if size > 0 else [v] * missing + vals
                return Arr(tuple(enumerate(seq)), len(seq), None)
    return _unknown_array(_taint_of(ctx, 0, 2))


def h_array_merge(ctx):
    out_items, nxt, dflt, exact = [], 0, None, True
    for a in ctx.args:
        if not isinstance(a, Arr):
            exact = False
            break
        if a.default is not None:
            dflt = a.default if dflt is None else join(dflt, a.default)
        for k, x in a.elems:
            if isinstance(k, str):
                out_items = [(y, z) for y, z in out_items if y != k]
                out_items.append((k, x))
            else:
                out_items.append((nxt, x))
                nxt += 1
        if a.next_index is None or a.default is not None:
            exact = False
    if not exact:
        return _unknown_array(_taint_of(ctx, *range(len(ctx.args))))
    return Arr(tuple(out_items), nxt, dflt)


def h_array_values(ctx):
    a = ctx.arg(0)
    if isinstance(a, Arr) and a.default is None and a.next_index is not None:
        vals = [x for _, x in a.elems]
        return Arr(tuple(enumerate(vals)), len(vals), None)
    return _unknown_array(_taint_of(ctx, 0))


def h_array_keys(ctx):
    a = ctx.arg(0)
    if isinstance(a, Arr) and a.default is None and a.next_index is not None and len(ctx.args) == 1:
        keys = [lit(k) for k, _ in a.elems]
        return Arr(tuple(enumerate(keys)), len(keys), None)
    if isinstance(a, Source):
        t = frozenset(deep_taint(a, ctx.heap)[0])
        return Arr((), None, Unknown(t, ()))
    return Arr((), None, Scalar(ScalarType.UNKNOWN))


def h_count(ctx):
    a = ctx.arg(0)
    if isinstance(a, Arr) and a.default is None and a.next_index is not None and len(ctx.args) == 1:
        return lit(len(a.elems))
    return Scalar(ScalarType.INT)


def h_array_key_exists(ctx):
    k, a = ctx.arg(0), ctx.arg(1)
    if isinstance(a, Arr) and isinstance(k, Scalar) and k.values is not None:
        results = set()
        for kv in k.values:
            try:
                key = phpsem.normalize_key(kv)
            except PhpRuntimeError:
                return Scalar(ScalarType.BOOL)
            if a.has(key):
                results.add(True)
            elif a.default is None and a.next_index is not None:
                results.add(False)
            else:
                return Scalar(ScalarType.BOOL)
        return scalar_of(sorted(results))
    return Scalar(ScalarType.BOOL)


def h_array_push(ctx):
    a = ctx.arg(0)
    if not isinstance(a, Arr):
        a = Arr((), None, None) if isinstance(a, Scalar) and a == NULL else _unknown_array(_taint_of(ctx, 0))
    for v in ctx.args[1:]:
        a = arr_write(a, APPEND, v)
    ctx.out[0] = a
    if a.next_index is not None and a.default is None:
        return lit(len(a.elems))
    return Scalar(ScalarType.INT)


def h_array_pop(ctx):
    a = ctx.arg(0)
    if isinstance(a, Arr) and a.default is None and a.next_index is not None:
        if not a.elems:
            return NULL
        last_k, last_v = a.elems[-1]
        rest = a.elems[:-1]
        ints = [k for k, _ in rest if isinstance(k, int)]
        ctx.out[0] = Arr(rest, max(ints) + 1 if ints else 0, None)
        return last_v
    if isinstance(a, Arr):
        return arr_read(a, ANY)
    return Unknown(*_taint_of(ctx, 0))


def h_array_shift(ctx):
    a = ctx.arg(0)
    if isinstance(a, Arr) and a.default is None and a.next_index is not None:
        if not a.elems:
            return NULL
        first = a.elems[0][1]
        rest = _renumber_elems(a.elems[1:])
        ctx.out[0] = rest
        return first
    if isinstance(a, Arr):
        return arr_read(a, ANY)
    return Unknown(*_taint_of(ctx, 0))


def _renumber_elems(elems):
    out, nxt = [], 0
    for k, v in elems:
        if isinstance(k, str):
            out.append((k, v))
        else:
            out.append((nxt, v))
            nxt += 1
    return Arr(tuple(out), nxt, None)


def h_explode(ctx):
    t = _taint_of(ctx, 1)
    if not t[0]:
        return _unknown_array()
    return Arr((), None, Unknown(*t) if t[1] else Scalar(ScalarType.STR, None, t[0], t[1]))


def h_str_split(ctx):
    return h_explode_like(ctx, 0)


def h_explode_like(ctx, i):
    t = _taint_of(ctx, i)
    return Arr((), None, Scalar(ScalarType.STR, None, t[0], t[1]))


def h_in_array(ctx):
    return Scalar(ScalarType.BOOL)


def h_preg_match(ctx):
    if len(ctx.args) >= 3:
        t = _taint_of(ctx, 1)
        ctx.out[2] = Arr((), None, Scalar(ScalarType.STR, None, t[0], t[1]))
    return Scalar(ScalarType.INT)


def h_array_slice(ctx):
    a = ctx.arg(0)
    if isinstance(a, Arr):
        return Arr((), None, arr_read(a, ANY))
    return _unknown_array(_taint_of(ctx, 0))


def h_array_reverse(ctx):
    return h_array_slice(ctx)


def h_array_map(ctx):
    # callbacks are not followed: elements may come from any array argument
    return _unknown_array(_taint_of(ctx, *range(1, len(ctx.args))))


# ---------------------------------------------------------------- environment

def h_chdir(ctx):
    try:
        d = ctx.single(0)
    except NotConcrete:
        ctx.notes.append("chdir with non-concrete path ignored")
        return Scalar(ScalarType.BOOL)
    d = to_str(d)
    new = posixpath.normpath(posixpath.join(ctx.env.cwd, d)) if d else ctx.env.cwd
    ctx.new_env = Env(new, ctx.env.include_path, ctx.env.included_once, ctx.env.executed)
    return lit(True)


def h_getcwd(ctx):
    return lit(ctx.env.cwd)


def h_get_include_path(ctx):
    return lit(":".join(ctx.env.include_path))


def h_set_include_path(ctx):
    old = lit(":".join(ctx.env.include_path))
    try:
        p = to_str(ctx.single(0))
    except NotConcrete:
        ctx.notes.append("set_include_path with non-concrete value ignored")
        return old
    parts = tuple(x for x in p.split(":") if x)
    ctx.new_env = Env(ctx.env.cwd, parts, ctx.env.included_once, ctx.env.executed)
    return old


def h_define(ctx):
    name, value = ctx.arg(0), ctx.arg(1)
    if isinstance(name, Scalar) and name.is_single and value is not None:
        ctx.defines.append((to_str(name.concrete), value))
        return lit(True)
    ctx.notes.append("define with non-concrete name ignored")
    return Scalar(ScalarType.BOOL)


def h_constant(ctx):
    name = ctx.arg(0)
    if isinstance(name, Scalar) and name.is_single:
        v = ctx.consts.get(to_str(name.concrete))
        if v is not None:
            return v
    return Unknown()


def h_defined(ctx):
    name = ctx.arg(0)
    if isinstance(name, Scalar) and name.is_single:
        return lit(to_str(name.concrete) in ctx.consts)
    return Scalar(ScalarType.BOOL)


def h_parse_str(ctx):
    s = ctx.arg(0)
    t = _taint_of(ctx, 0)
    try:
        parsed = php_parse_str(ctx.single(0))
        value = lit(parsed, t[0], t[1]) if t[0] else lit(parsed)
    except (NotConcrete, PhpRuntimeError):
        value = Arr((), None, Unknown(*t)) if t[0] else Arr((), None, Scalar(ScalarType.STR))
        parsed = None
    if len(ctx.args) >= 2:
        ctx.out[1] = value
    elif parsed is not None:
        for k, x in value.elems:
            ctx.scope_writes[str(k)] = x
    else:
        ctx.notes.append("parse_str into the local scope with unknown input")
        ctx.scope_writes[ANY] = value.default
    del s
    return NULL


# ====================================================================== registry

_S = "string"


def _m(name, rule, concrete=None, abstract=None, rtype=_S, arg=0, effect=None, byref=(), doc=""):
    return BuiltinModel(name, rule, arg, concrete, abstract, rtype, effect, byref, doc)


P, A, C, N = TaintRule.PASS_ALL, TaintRule.PASS_ARG, TaintRule.CLEAR, TaintRule.NONE


def _models():
    ms = [
        # strings
        _m("strlen", N, lambda s: len(_s(s)), rtype="int"),
        _m("strtolower", A, lambda s: _ascii_lower(_s(s))),
        _m("strtoupper", A, lambda s: _ascii_upper(_s(s))),
        _m("ucfirst", A, lambda s: _ascii_upper(_s(s)[:1]) + _s(s)[1:]),
        _m("lcfirst", A, lambda s: _ascii_lower(_s(s)[:1]) + _s(s)[1:]),
        _m("ucwords", A, php_ucwords),
        _m("trim", A, lambda s, c=_WS: php_trim(s, c)),
        _m("ltrim", A, lambda s, c=_WS: php_trim(s, c, "left")),
        _m("rtrim", A, lambda s, c=_WS: php_trim(s, c, "right")),
        _m("chop", A, lambda s, c=_WS: php_trim(s, c, "right")),
        _m("substr", A, php_substr),
        _m("str_replace", P, php_str_replace, rtype="mixed"),
        _m("sprintf", P, php_sprintf),
        _m("vsprintf", P, lambda f, a: php_sprintf(f, *_arr(a, "vsprintf").values())),
        _m("implode", P, php_implode),
        _m("join", P, php_implode),
        _m("explode", A, php_explode, h_explode, rtype="array", arg=1),
        _m("str_repeat", A, php_str_repeat),
        _m("str_pad", P, php_str_pad),
        _m("strrev", A, lambda s: _s(s)[::-1]),
        _m("str_split", A, php_str_split, h_str_split, rtype="array"),
        _m("strpos", N, php_strpos, rtype="mixed"),
        _m("str_contains", N, lambda h, n: _s(n) in _s(h), rtype="bool"),
        _m("str_starts_with", N, lambda h, n: _s(h).startswith(_s(n)), rtype="bool"),
        _m("str_ends_with", N, lambda h, n: _s(h).endswith(_s(n)), rtype="bool"),
        _m("strcmp", N, lambda a, b: (_s(a) > _s(b)) - (_s(a) < _s(b)), rtype="int"),
        _m("nl2br", A, php_nl2br),
        _m("strip_tags", A),
        _m("preg_replace", P, rtype="mixed"),
        _m("preg_match", N, abstract=h_preg_match, rtype="int", byref=(2,)),
        _m("preg_split", A, abstract=lambda ctx: h_explode_like(ctx, 1), rtype="array", arg=1),
        _m("number_format", N, rtype="string"),
        _m("ord", N, lambda s: ord(_s(s)[0]) if _s(s) else 0, rtype="int"),
        _m("chr", A, lambda n: chr(to_int(n) % 256)),
        _m("md5", N, lambda s: hashlib.md5(_s(s).encode("latin-1")).hexdigest()),
        _m("sha1", N, lambda s: hashlib.sha1(_s(s).encode("latin-1")).hexdigest()),
        _m("crc32", N, lambda s: zlib.crc32(_s(s).encode("latin-1")), rtype="int"),
        _m("dirname", A, php_dirname),
        _m("basename", A, php_basename),
        _m("strval", A, lambda v: _s(v)),
        _m("json_encode", P, php_json_encode, rtype="mixed"),
        _m("json_decode", A, php_json_decode, rtype="mixed"),
        _m("serialize", P),
        _m("unserialize", A, rtype="mixed"),
        # sanitizers and decoders (classes and pairing live in the rule set)
        _m("htmlspecialchars", C, php_htmlspecialchars),
        _m("htmlspecialchars_decode", C, php_htmlspecialchars_decode),
        _m("htmlentities", C, php_htmlentities),
        _m("html_entity_decode", C, php_html_entity_decode),
        _m("urlencode", C, php_urlencode),
        _m("urldecode", C, php_urldecode),
        _m("rawurlencode", C, lambda s: php_urlencode(s, raw=True)),
        _m("rawurldecode", C, lambda s: php_urldecode(s, raw=True)),
        _m("base64_encode", C, php_base64_encode),
        _m("base64_decode", C, php_base64_decode, rtype="mixed"),
        _m("addslashes", C, php_addslashes),
        _m("stripslashes", C, php_stripslashes),
        _m("mysql_real_escape_string", C),
        _m("mysqli_real_escape_string", C, arg=1),
        _m("escapeshellarg", C),
        _m("escapeshellcmd", C),
        _m("intval", C, php_intval, rtype="int"),
        _m("floatval", C, lambda v: phpsem.to_float(v), rtype="float"),
        _m("boolval", C, lambda v: phpsem.to_bool(v), rtype="bool"),
        _m("abs", N, php_abs, rtype="mixed"),
        _m("max", P, php_max, rtype="mixed"),
        _m("min", P, php_min, rtype="mixed"),
        _m("floor", N, lambda v: float(math.floor(phpsem.to_number(v))), rtype="float"),
        _m("ceil", N, lambda v: float(math.ceil(phpsem.to_number(v))), rtype="float"),
        # predicates
        _m("is_array", N, lambda v: isinstance(v, ArrayLit), rtype="bool"),
        _m("is_string", N, lambda v: isinstance(v, str), rtype="bool"),
        _m("is_int", N, lambda v: isinstance(v, int) and not isinstance(v, bool), rtype="bool"),
        _m("is_bool", N, lambda v: isinstance(v, bool), rtype="bool"),
        _m("is_null", N, lambda v: v is None, rtype="bool"),
        _m("is_numeric", N, php_is_numeric, rtype="bool"),
        _m("gettype", N, php_gettype),
        _m("file_exists", N, rtype="bool"),
        _m("is_file", N, rtype="bool"),
        _m("function_exists", N, rtype="bool"),
        # arrays
        _m("array_pad", P, php_array_pad, h_array_pad, rtype="array"),
        _m("array_merge", P, php_array_merge, h_array_merge, rtype="array"),
        _m("array_keys", A, php_array_keys, h_array_keys, rtype="array"),
        _m("array_values", A, php_array_values, h_array_values, rtype="array"),
        _m("count", N, php_count, h_count, rtype="int"),
        _m("sizeof", N, php_count, h_count, rtype="int"),
        _m("in_array", N, php_in_array, h_in_array, rtype="bool"),
        _m("array_search", N, php_array_search, rtype="mixed"),
        _m("array_key_exists", N, php_array_key_exists, h_array_key_exists, rtype="bool"),
        _m("key_exists", N, php_array_key_exists, h_array_key_exists, rtype="bool"),
        _m("array_slice", A, php_array_slice, h_array_slice, rtype="array"),
        _m("array_reverse", A, php_array_reverse, h_array_reverse, rtype="array"),
        _m("array_flip", A, php_array_flip, rtype="array"),
        _m("array_combine", P, php_array_combine, rtype="array"),
        _m("array_fill", A, php_array_fill, rtype="array", arg=2),
        _m("range", N, php_range, rtype="array"),
        _m("array_sum", N, php_array_sum, rtype="mixed"),
        _m("array_map", P, abstract=h_array_map, rtype="array"),
        _m("array_filter", A, abstract=h_array_slice, rtype="array"),
        _m("array_unique", A, abstract=h_array_slice, rtype="array"),
        _m("array_push", P, abstract=h_array_push, rtype="int", byref=(0,)),
        _m("array_pop", A, abstract=h_array_pop, rtype="mixed", byref=(0,)),
        _m("array_shift", A, abstract=h_array_shift, rtype="mixed", byref=(0,)),
        # environment
        _m("chdir", N, abstract=h_chdir, rtype="bool", effect="cwd"),
        _m("getcwd", N, abstract=h_getcwd, effect="cwd"),
        _m("get_include_path", N, abstract=h_get_include_path, effect="include_path"),
        _m("set_include_path", N, abstract=h_set_include_path, effect="include_path"),
        _m("define", N, abstract=h_define, rtype="bool", effect="constants"),
        _m("constant", P, abstract=h_constant, rtype="mixed", effect="constants"),
        _m("defined", N, abstract=h_defined, rtype="bool", effect="constants"),
        _m("parse_str", N, abstract=h_parse_str, rtype="null", effect="scope", byref=(1,)),
        # sinks and side-effecting calls with no useful result
        _m("mysql_query", N, rtype="mixed"),
        _m("mysqli_query", N, rtype="mixed"),
        _m("pg_query", N, rtype="mixed"),
        _m("system", N, rtype="mixed"),
        _m("exec", N, rtype="mixed"),
        _m("passthru", N, rtype="mixed"),
        _m("shell_exec", N, rtype="mixed"),
        _m("popen", N, rtype="mixed"),
        _m("proc_open", N, rtype="mixed"),
        _m("assert", N, rtype="bool"),
        _m("unlink", N, rtype="bool"),
        _m("rmdir", N, rtype="bool"),
        _m("move_uploaded_file", N, rtype="bool"),
        _m("copy", N, rtype="bool"),
        _m("file_get_contents", N, rtype="mixed"),
        _m("file_put_contents", N, rtype="mixed"),
        _m("readfile", N, rtype="mixed"),
        _m("fopen", N, rtype="mixed"),
        _m("file", N, rtype="mixed"),
        _m("highlight_file", N, rtype="mixed"),
        _m("show_source", N, rtype="mixed"),
        _m("header", N, rtype="null"),
        _m("printf", N, rtype="int"),
        _m("print_r", P, rtype="mixed"),
        _m("var_dump", N, rtype="null"),
        _m("error_reporting", N, rtype="int"),
        _m("ini_set", N, rtype="mixed"),
        _m("session_start", N, rtype="bool"),
        _m("mysqli_connect", N, rtype="mixed"),
        _m("mysqli_fetch_assoc", N, rtype="mixed"),
        _m("time", N, rtype="int"),
        _m("rand", N, rtype="int"),
        _m("mt_rand", N, rtype="int"),
    ]
    return ms


REGISTRY: dict = {}
for _model in _models():
    if _model.name in REGISTRY:
        raise RuntimeError(f"duplicate built-in model {_model.name}")
    REGISTRY[_model.name] = _model


def register_minimum_set() -> dict:
    """The default registry (a fresh copy)."""
    return dict(REGISTRY)


def concrete_call(model: BuiltinModel, literal_args):
    """Run a concrete implementation; raises NotConcrete / PhpRuntimeError / TypeError."""
    if model.concrete is None:
        raise NotConcrete
    return model.concrete(*literal_args)


def arg_choices(args, cap):
    """Cartesian product of argument literal choices, or None if unbounded."""
    per = []
    total = 1
    for a in args:
        c = literal_choices(a)
        if c is None:
            return None
        total *= len(c)
        if total > cap:
            return None
        per.append(c)
    return list(itertools.product(*per))


__all__ = ["TaintRule", "BuiltinModel", "CallCtx", "NotConcrete", "REGISTRY",
           "register_minimum_set", "concrete_call", "arg_choices", "to_literal"]
