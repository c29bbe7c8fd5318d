"""Source, sanitizer and sink rules.

The rules file is line oriented; ``#`` starts a comment::

    sanitizer <name> classes=<C1,C2|ALL|-> [decoder=<name>]
    sink <name|->method> <position|*> <CLASS>
    builtin <name> pass_all|none|clear|pass_arg=<i>

A user file is merged over the packaged defaults.  See docs/handbook.md.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .builtins import TaintRule
from .phpconst import TAINT_SOURCES

VULN_CLASSES = ("XSS", "SQLI", "RCE", "FI", "AFD", "UFU", "PT", "SDE")
ALL = frozenset(VULN_CLASSES)


class RulesError(Exception):
    def __init__(self, line: int, reason: str, path: str = ""):
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class Sanitizer:
    name: str
    classes: frozenset
    decoder: Optional[str] = None

    @property
    def reversible(self) -> bool:
        return self.decoder is not None


@dataclass
class RuleSet:
    sources: dict = field(default_factory=lambda: dict(TAINT_SOURCES))
    sanitizers: dict = field(default_factory=dict)     # name -> Sanitizer
    decoders: dict = field(default_factory=dict)       # decoder name -> encoder name
    sinks: dict = field(default_factory=dict)          # callee (or "->m") -> [(pos, class)]
    builtin_overrides: dict = field(default_factory=dict)   # name -> (TaintRule, arg)
    sink_opcodes: dict = field(default_factory=lambda: {"ECHO": "XSS", "EXIT": "XSS",
                                                        "INCLUDE": "FI", "EVAL": "RCE"})

    def sinks_for(self, name: str):
        return self.sinks.get(name.lower(), ())

    def method_sinks(self, method: str):
        return self.sinks.get("->" + method.lower(), ())

    def sanitizes(self, entry: str, vclass: str) -> bool:
        s = self.sanitizers.get(entry)
        return s is not None and vclass in s.classes


def _parse_classes(text, line, path):
    if text == "ALL":
        return ALL
    if text == "-":
        return frozenset()
    out = set()
    for c in text.split(","):
        if c not in VULN_CLASSES:
            raise RulesError(line, f"unknown vulnerability class {c!r}", path)
        out.add(c)
    return frozenset(out)


def parse_rules(text: str, base: Optional[RuleSet] = None, path: str = "") -> RuleSet:
    rs = RuleSet() if base is None else _clone(base)
    seen_sinks = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "sanitizer":
            if len(parts) < 3:
                raise RulesError(lineno, "sanitizer needs a name and classes=", path)
            name = parts[1].lower()
            opts = {}
            for p in parts[2:]:
                k, eq, v = p.partition("=")
                if not eq or k not in ("classes", "decoder") or k in opts:
                    raise RulesError(lineno, f"bad sanitizer option {p!r}", path)
                opts[k] = v
            if "classes" not in opts:
                raise RulesError(lineno, "sanitizer needs classes=", path)
            classes = _parse_classes(opts["classes"], lineno, path)
            decoder = opts.get("decoder", "").lower() or None
            old = rs.sanitizers.get(name)
            if old is not None and old.decoder:
                rs.decoders.pop(old.decoder, None)
            if decoder is not None:
                if decoder in rs.decoders and rs.decoders[decoder] != name:
                    raise RulesError(lineno, f"decoder {decoder} already paired with "
                                             f"{rs.decoders[decoder]}", path)
                rs.decoders[decoder] = name
            rs.sanitizers[name] = Sanitizer(name, classes, decoder)
        elif kind == "sink":
            if len(parts) != 4:
                raise RulesError(lineno, "sink needs <name> <position|*> <CLASS>", path)
            name, pos, vclass = parts[1].lower(), parts[2], parts[3]
            if pos != "*":
                if not pos.isdigit():
                    raise RulesError(lineno, f"bad sink position {pos!r}", path)
                pos = int(pos)
            if vclass not in VULN_CLASSES:
                raise RulesError(lineno, f"unknown vulnerability class {vclass!r}", path)
            key = (name, pos, vclass)
            if key in seen_sinks:
                raise RulesError(lineno, f"duplicate sink {name} {pos} {vclass}", path)
            seen_sinks.add(key)
            rows = rs.sinks.setdefault(name, [])
            if (pos, vclass) not in rows:
                rows.append((pos, vclass))
        elif kind == "builtin":
            if len(parts) != 3:
                raise RulesError(lineno, "builtin needs <name> <rule>", path)
            name, rule = parts[1].lower(), parts[2]
            if rule.startswith("pass_arg="):
                arg = rule[len("pass_arg="):]
                if not arg.isdigit():
                    raise RulesError(lineno, f"bad pass_arg index {arg!r}", path)
                rs.builtin_overrides[name] = (TaintRule.PASS_ARG, int(arg))
            elif rule in ("pass_all", "none", "clear"):
                rs.builtin_overrides[name] = (TaintRule(rule), 0)
            else:
                raise RulesError(lineno, f"unknown builtin rule {rule!r}", path)
        else:
            raise RulesError(lineno, f"unknown directive {kind!r}", path)
    return rs


def _clone(rs: RuleSet) -> RuleSet:
    return RuleSet(dict(rs.sources), dict(rs.sanitizers), dict(rs.decoders),
                   {k: list(v) for k, v in rs.sinks.items()}, dict(rs.builtin_overrides),
                   dict(rs.sink_opcodes))


_DEFAULT: Optional[RuleSet] = None


def default_rules() -> RuleSet:
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("opflow").joinpath("data/default.rules").read_text("utf-8")
        _DEFAULT = parse_rules(text, RuleSet(), "default.rules")
    return _clone(_DEFAULT)


def load_rules(path: Optional[str] = None) -> RuleSet:
    """Default rules merged with ``path`` (or ``$OPFLOW_RULES`` when path is None)."""
    if path is None:
        path = os.environ.get("OPFLOW_RULES") or None
    base = default_rules()
    if path is None:
        return base
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise RulesError(0, f"cannot read rules file: {e.strerror}", path) from None
    return parse_rules(text, base, path)
