"""Tokenizer for the supported PHP subset.

Source text is a latin-1 decoded byte string (see ``opflow.ir``).  Every token
keeps its raw ``lexeme`` and byte offset, so concatenating lexemes with the
skipped gaps (whitespace and comments) reproduces the input exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field


class LexError(Exception):
    def __init__(self, line: int, offset: int, reason: str):
        super().__init__(f"line {line}, offset {offset}: {reason}")
        self.line = line
        self.offset = offset
        self.reason = reason


class TokenKind(enum.Enum):
    INLINE_HTML = "InlineHtml"
    OPEN_TAG = "OpenTag"
    OPEN_TAG_ECHO = "OpenTagEcho"
    CLOSE_TAG = "CloseTag"
    VARIABLE = "Var"
    IDENT = "Ident"
    INT = "Int"
    FLOAT = "Float"
    STRING = "String"
    TEMPLATE = "Template"      # double-quoted string with interpolation
    CAST = "Cast"
    OP = "Op"


@dataclass
class Token:
    kind: TokenKind
    value: object
    lexeme: str
    line: int
    pos: int
    parts: list = field(default_factory=list)   # TEMPLATE only

    def is_op(self, *ops) -> bool:
        return self.kind is TokenKind.OP and self.value in ops

    def is_kw(self, *words) -> bool:
        return self.kind is TokenKind.IDENT and self.value.lower() in words

    def __repr__(self):
        return f"{self.kind.value}({self.value!r})@{self.line}"


# Longest operators first.
_OPERATORS = sorted("""
<=> **= ... <<= >>= === !== ??= ?->
++ -- -> => :: == != <> <= >= && || ?? += -= *= /= .= %= &= |= ^= << >> **
+ - * / % = < > ! . , ; ( ) [ ] { } ? : @ & | ^ ~ $ \\
""".split(), key=len, reverse=True)

_CAST_TYPES = {
    "int": "int", "integer": "int", "float": "float", "double": "float",
    "real": "float", "string": "string", "bool": "bool", "boolean": "bool",
    "array": "array", "object": "object", "binary": "string",
}

_IDENT_RE = re.compile(r"[A-Za-z_\x80-\xff][A-Za-z0-9_\x80-\xff]*")
_WS_RE = re.compile(r"[ \t\r\n\v\f]+")
_NUM_RE = re.compile(
    r"0[xX][0-9a-fA-F]+(?:_[0-9a-fA-F]+)*"
    r"|0[bB][01]+(?:_[01]+)*"
    r"|(?:[0-9]+(?:_[0-9]+)*)?\.[0-9]+(?:_[0-9]+)*(?:[eE][+-]?[0-9]+)?"
    r"|[0-9]+(?:_[0-9]+)*\.(?:[0-9]+(?:_[0-9]+)*)?(?:[eE][+-]?[0-9]+)?"
    r"|[0-9]+(?:_[0-9]+)*[eE][+-]?[0-9]+"
    r"|[0-9]+(?:_[0-9]+)*"
)
_CAST_RE = re.compile(r"\([ \t]*([A-Za-z]+)[ \t]*\)")
_OPEN_RE = re.compile(r"<\?php(?=[ \t\r\n]|$)|<\?=", re.IGNORECASE)

INT_MAX = 2**63 - 1


def parse_number(text: str):
    t = text.replace("_", "")
    low = t.lower()
    if low.startswith("0x"):
        v = int(t[2:], 16)
    elif low.startswith("0b"):
        v = int(t[2:], 2)
    elif any(c in low for c in ".e"):
        return float(t)
    elif len(t) > 1 and t[0] == "0" and t.isdigit():
        v = int(t, 8) if all(c in "01234567" for c in t) else int(t, 10)
    else:
        v = int(t)
    return float(v) if v > INT_MAX else v


class _Lexer:
    def __init__(self, src: str, base_line: int = 1):
        self.src = src
        self.pos = 0
        self.line = base_line
        self.tokens: list = []

    def error(self, reason, pos=None):
        pos = self.pos if pos is None else pos
        line = self.line + self.src.count("\n", self.pos, pos) if pos >= self.pos else self.line
        raise LexError(line, pos, reason)

    def emit(self, kind, value, start, end, parts=None):
        lexeme = self.src[start:end]
        tok = Token(kind, value, lexeme, self.line, start, parts or [])
        self.tokens.append(tok)
        self.line += lexeme.count("\n")
        self.pos = end
        return tok

    def skip(self, end):
        self.line += self.src.count("\n", self.pos, end)
        self.pos = end

    def run_html(self):
        src = self.src
        while self.pos < len(src):
            m = _OPEN_RE.search(src, self.pos)
            if m is None:
                self.emit(TokenKind.INLINE_HTML, src[self.pos:], self.pos, len(src))
                return
            if m.start() > self.pos:
                self.emit(TokenKind.INLINE_HTML, src[self.pos:m.start()], self.pos, m.start())
            if m.group(0) == "<?=":
                self.emit(TokenKind.OPEN_TAG_ECHO, "<?=", m.start(), m.end())
            else:
                self.emit(TokenKind.OPEN_TAG, "<?php", m.start(), m.end())
            if not self.run_php():
                return

    def run_php(self) -> bool:
        """Lex PHP code; returns True when a close tag switched back to HTML."""
        src, n = self.src, len(self.src)
        while self.pos < n:
            c = src[self.pos]
            m = _WS_RE.match(src, self.pos)
            if m:
                self.skip(m.end())
                continue
            if src.startswith("?>", self.pos):
                end = self.pos + 2
                if src.startswith("\r\n", end):
                    end += 2
                elif src.startswith("\n", end):
                    end += 1
                self.emit(TokenKind.CLOSE_TAG, "?>", self.pos, end)
                return True
            if c == "#" or src.startswith("//", self.pos):
                end = self.pos
                while end < n and src[end] != "\n" and not src.startswith("?>", end):
                    end += 1
                self.skip(end)
                continue
            if src.startswith("/*", self.pos):
                end = src.find("*/", self.pos + 2)
                if end < 0:
                    self.error("unterminated comment")
                self.skip(end + 2)
                continue
            if c == "$" and self.pos + 1 < n and _IDENT_RE.match(src, self.pos + 1):
                m = _IDENT_RE.match(src, self.pos + 1)
                self.emit(TokenKind.VARIABLE, m.group(0), self.pos, m.end())
                continue
            m = _IDENT_RE.match(src, self.pos)
            if m:
                self.emit(TokenKind.IDENT, m.group(0), self.pos, m.end())
                continue
            if c.isdigit() or (c == "." and self.pos + 1 < n and src[self.pos + 1].isdigit()):
                m = _NUM_RE.match(src, self.pos)
                value = parse_number(m.group(0))
                kind = TokenKind.FLOAT if isinstance(value, float) else TokenKind.INT
                self.emit(kind, value, self.pos, m.end())
                continue
            if c == "'":
                self.single_quoted()
                continue
            if c == '"':
                self.double_quoted()
                continue
            if c == "(":
                m = _CAST_RE.match(src, self.pos)
                if m and m.group(1).lower() in _CAST_TYPES:
                    self.emit(TokenKind.CAST, _CAST_TYPES[m.group(1).lower()], self.pos, m.end())
                    continue
            for op in _OPERATORS:
                if src.startswith(op, self.pos):
                    self.emit(TokenKind.OP, op, self.pos, self.pos + len(op))
                    break
            else:
                self.error(f"illegal character {c!r}")
        return False

    def single_quoted(self):
        src, start = self.src, self.pos
        i = start + 1
        out = []
        while i < len(src):
            c = src[i]
            if c == "\\" and i + 1 < len(src) and src[i + 1] in "\\'":
                out.append(src[i + 1])
                i += 2
                continue
            if c == "'":
                self.emit(TokenKind.STRING, "".join(out), start, i + 1)
                return
            out.append(c)
            i += 1
        self.error("unterminated string", start)

    def double_quoted(self):
        src, start = self.src, self.pos
        i = start + 1
        while i < len(src):
            if src[i] == "\\":
                i += 2
                continue
            if src[i] == '"':
                break
            i += 1
        else:
            self.error("unterminated string", start)
        body_line = self.line
        parts = _split_template(src[start + 1:i], body_line, start + 1)
        if all(isinstance(p, str) for p in parts):
            self.emit(TokenKind.STRING, "".join(parts), start, i + 1)
        else:
            self.emit(TokenKind.TEMPLATE, None, start, i + 1, parts)


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "v": "\v", "e": "\x1b", "f": "\f",
            "\\": "\\", "$": "$", '"': '"'}


def decode_escapes(text: str) -> str:
    """Decode double-quoted escape sequences (no interpolation)."""
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c != "\\" or i + 1 >= n:
            out.append(c)
            i += 1
            continue
        d = text[i + 1]
        if d in _ESCAPES:
            out.append(_ESCAPES[d])
            i += 2
        elif d in "01234567":
            m = re.match(r"[0-7]{1,3}", text[i + 1:])
            out.append(chr(int(m.group(0), 8) & 0xFF))
            i += 1 + len(m.group(0))
        elif d == "x" and i + 2 < n and text[i + 2] in "0123456789abcdefABCDEF":
            m = re.match(r"[0-9a-fA-F]{1,2}", text[i + 2:])
            out.append(chr(int(m.group(0), 16)))
            i += 2 + len(m.group(0))
        elif d == "u" and text.startswith("{", i + 2) and "}" in text[i + 3:]:
            end = text.index("}", i + 3)
            try:
                cp = int(text[i + 3:end], 16)
                out.append(chr(cp).encode("utf-8").decode("latin-1"))
            except (ValueError, OverflowError):
                raise LexError(1, i, "invalid unicode escape") from None
            i = end + 1
        else:
            out.append(c)
            i += 1
    return "".join(out)


_SIMPLE_VAR = re.compile(r"\$([A-Za-z_\x80-\xff][A-Za-z0-9_\x80-\xff]*)")


def _split_template(body: str, line: int, offset: int) -> list:
    """Split a double-quoted body into literal strings and token lists."""
    parts: list = []
    lit: list = []
    i, n = 0, len(body)

    def flush():
        if lit:
            parts.append(decode_escapes("".join(lit)))
            lit.clear()

    def cur_line(at):
        return line + body.count("\n", 0, at)

    while i < n:
        c = body[i]
        if c == "\\" and i + 1 < n:
            lit.append(body[i:i + 2])
            i += 2
            continue
        if c == "{" and i + 1 < n and body[i + 1] == "$":
            depth, j = 0, i
            while j < n:
                if body[j] == "{":
                    depth += 1
                elif body[j] == "}":
                    depth -= 1
                    if depth == 0:
                        break
                elif body[j] in "'\"":
                    q = body[j]
                    j += 1
                    while j < n and body[j] != q:
                        j += 2 if body[j] == "\\" else 1
                j += 1
            if j >= n:
                raise LexError(cur_line(i), offset + i, "unterminated interpolation")
            flush()
            parts.append(_sublex(body[i + 1:j], cur_line(i), offset + i + 1))
            i = j + 1
            continue
        if c == "$" and i + 1 < n and body[i + 1] == "{":
            end = body.find("}", i)
            if end < 0:
                raise LexError(cur_line(i), offset + i, "unterminated interpolation")
            inner = body[i + 2:end]
            flush()
            if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", inner):
                parts.append(_sublex("$" + inner, cur_line(i), offset + i))
            else:
                parts.append(_sublex("${" + inner + "}", cur_line(i), offset + i))
            i = end + 1
            continue
        m = _SIMPLE_VAR.match(body, i)
        if m:
            flush()
            j = m.end()
            code = m.group(0)
            if j < n and body[j] == "[":
                close = body.find("]", j)
                if close > 0:
                    key = body[j + 1:close]
                    if re.fullmatch(r"-?[0-9]+", key):
                        code += f"[{key}]"
                    elif re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
                        code += "['" + key + "']"
                    elif _SIMPLE_VAR.fullmatch(key):
                        code += f"[{key}]"
                    else:
                        raise LexError(cur_line(i), offset + j, "bad array index in string")
                    j = close + 1
            elif body.startswith("->", j) and re.match(r"[A-Za-z_]", body[j + 2:j + 3]):
                pm = _IDENT_RE.match(body, j + 2)
                code += "->" + pm.group(0)
                j = pm.end()
            parts.append(_sublex(code, cur_line(i), offset + i))
            i = j
            continue
        lit.append(c)
        i += 1
    flush()
    return parts


def _sublex(code: str, line: int, offset: int) -> list:
    lx = _Lexer(code, line)
    lx.run_php()
    for t in lx.tokens:
        t.pos += offset
    return lx.tokens


def lex(source) -> list:
    """Tokenize a PHP file.  Accepts ``bytes`` or latin-1 ``str``."""
    if isinstance(source, (bytes, bytearray)):
        source = bytes(source).decode("latin-1")
    if len(source) > 16 * 1024 * 1024:
        raise LexError(1, 0, "input exceeds 16 MiB")
    lx = _Lexer(source)
    lx.run_html()
    return lx.tokens


def gaps(source: str, tokens: list) -> list:
    """Text skipped between tokens (whitespace and comments)."""
    out, pos = [], 0
    for t in tokens:
        out.append(source[pos:t.pos])
        pos = t.pos + len(t.lexeme)
    out.append(source[pos:])
    return out
