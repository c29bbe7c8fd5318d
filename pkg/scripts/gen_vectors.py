#!/usr/bin/env python3
"""Regenerate tests/vectors/*.json by running real PHP on builtin test inputs.

Needs node and ``npm install`` in scripts/php_oracle (php-wasm, PHP 8.3).
Each vector file holds ``[{"args": [...], "result": ...}]`` where values use
the byte-exact encoding in ``opflow.vectors``.

    python3 scripts/gen_vectors.py [name ...]
"""

from __future__ import annotations

import json
import os
import random
import subprocess
import sys

from opflow.builtins import REGISTRY
from opflow.ir import ArrayLit
from opflow.vectors import decode, encode, php_literal

HERE = os.path.dirname(os.path.abspath(__file__))
ORACLE = os.path.join(HERE, "php_oracle", "run.mjs")
OUT = os.path.join(os.path.dirname(HERE), "tests", "vectors")

A = ArrayLit.from_list


def D(*pairs):
    return ArrayLit(tuple(pairs))


HTML = ["", "plain", "<a href='x'>T&amp;C</a>", '"quoted" & <b>', "caf\xc3\xa9 \xe9", "&lt;&#39;&#x41;&quot;",
        "&nbsp;&copy;&bogus;", "a\x00b", "O'Reilly\\n"]
URL = ["", "a b+c", "100%", "%41%4g%", "\xff\xfe~-_.", "x=1&y=[2]", "%2B%20+"]
PATHS = ["", "/", "a", "/a/b/c.php", "a/b/", "//x//y//", ".", "..", "/a/b.tar.gz", "c:\\win\\x"]
NUMS = ["", "0", "42", " 42", "42 ", "4.5e3", "0x1A", "abc", "12abc", "-0", ".5", "1e1000", "  -7.25"]
MIXED = [None, True, False, 0, -3, 7, 2.5, -0.0, 1e15, 1e100, "", "0", "12", "1.5", "abc", "12abc", " 3"]

CASES = {
    "htmlspecialchars": [(s,) for s in HTML] + [(HTML[2], 0), (HTML[2], 2), (HTML[5], 3, None, False),
                                                 ("\xff<", 3), ("\xff<", 11),
                                                 ("&amp; &bogus; &#1114112; &#x41; &apos; &sup2; &#xZ; &copy", 3, None, False)],
    "htmlentities": [(s,) for s in HTML] + [("caf\xc3\xa9 \xc2\xa9 <", 3), ("\xa9", 3),
                                                    ("\xe2\x82\xac \xe2\x80\xa8 \xf0\x9f\x98\x80 '",)],
    "htmlspecialchars_decode": [(s,) for s in HTML] + [("&#039;&#39;", 0), ("&quot;&#039;", 2)],
    "html_entity_decode": [(s,) for s in HTML] + [("&eacute;&copy;&hellip;&#8364;&euro;",), ("&#0;&#xD800;&#1114112;",),
        ("&#128;&#9;&#1;&#x7f;&#65534;&#xFDD0;&#x1F600;&apos;&#39;&#34;&quot;&sup2;&AMP;&amp",),
        ("&#39;&quot;&#34;", 0)],
    "urlencode": [(s,) for s in URL],
    "rawurlencode": [(s,) for s in URL],
    "urldecode": [(s,) for s in URL],
    "rawurldecode": [(s,) for s in URL],
    "base64_encode": [(s,) for s in ["", "a", "ab", "abc", "\xff\x00\x10", "hello world"]],
    "base64_decode": [(s,) for s in ["", "YQ==", "YWI", "Y W\nJj", "!!!YWJj", "/w==", "YQ=Q", "Zm9v YmFy"]]
    + [("YQ=Q", True), ("Y*Q==", True), ("YWJj", True)],
    "addslashes": [(s,) for s in ["", "O'Reilly", 'say "hi"', "back\\slash", "nul\x00byte"]],
    "stripslashes": [(s,) for s in ["", "O\\'Reilly", "a\\\\b", "\\0x", "trail\\", "\\n\\t"]],
    "trim": [(s,) for s in ["", "  x  ", "\t\n x\x00\x0b", "xx"]] + [("xxaxx", "x"), ("abcba", "a..b"), ("[x]", "[]")],
    "ltrim": [("  x  ",), ("0012", "0"), ("abc", "a..c")],
    "rtrim": [("  x  ",), ("1.500", "0"), ("line\r\n",)],
    "chop": [("x \n",), ("abc", "c")],
    "substr": [("hello", 1), ("hello", -3), ("hello", 1, 3), ("hello", 1, -1), ("hello", 10), ("hello", -10, 2),
               ("hello", 0, 0), ("hello", 2, None), ("", 0)],
    "str_replace": [("a", "b", "banana"), ("", "x", "abc"), (A(["a", "b"]), "z", "abcab"),
                    (A(["a", "b"]), A(["b", "c"]), "ab"), ("x", "y", A(["xx", "ax"])), ("ab", "", "aabb")],
    "explode": [(",", "a,b,,c"), (",", ""), (", ", "a, b"), (",", "a,b,c", 2), (",", "a,b,c", -1), (",", "a,b,c", 0),
                (",", "abc"), ("", "abc")],
    "implode": [(",", A(["a", "b", 3])), (A(["x", "y"]),), ("-", A([])), (", ", A([True, None, 1.5]))],
    "join": [("+", A(["1", "2"]))],
    "str_pad": [("5", 3, "0", 0), ("abc", 8, "xy", 2), ("abc", 2), ("abc", 7, "-", 1), ("x", 4, "")],
    "strpos": [("hello", "l"), ("hello", "z"), ("hello", "l", 3), ("hello", "", 0), ("hello", "o", -1), ("a", "a", 5)],
    "nl2br": [("a\nb",), ("a\r\nb\rc\n\r",), ("",)],
    "str_split": [("abcde",), ("abcde", 2), ("", 1), ("ab", 0)],
    "str_repeat": [("ab", 3), ("x", 0), ("x", -1)],
    "sprintf": [("%s-%d", "a", "12abc"), ("%05.2f", 3.14159), ("%x %X %o %b", 255, 255, 8, 5), ("%'*10s|%-6s|", "r", "l"),
                ("%e", 12345.678), ("%.3e", 0.000123), ("%u", -1), ("%c%%", 65), ("%2$s %1$s", "a", "b"),
                ("%+d %+d", 5, -5), ("%s", 1.0), ("%s", 0.1 + 0.2), ("%.1f", 2.45), ("%10.4f|", -3.5), ("%s", True),
                ("%d", "x"), ("%G", 0.00001234), ("%g", 123456789.0), ("%5.1s|", "abc")],
    "vsprintf": [("%s/%s", A(["a", "b"])), ("%04d", A([7]))],
    "intval": [(v,) for v in MIXED + NUMS] + [("0x1A", 16), ("0x1A", 0), ("012", 0), ("101", 2), ("z", 36)],
    "floatval": [(v,) for v in MIXED + NUMS],
    "boolval": [(v,) for v in MIXED + [A([]), A([0])]],
    "strval": [(v,) for v in MIXED] + [(0.1 + 0.2,), (1e14,), (-1.5e-7,), (123456789012345678.0,)],
    "is_numeric": [(v,) for v in MIXED + NUMS],
    "gettype": [(v,) for v in [None, True, 1, 1.5, "s", A([])]],
    "is_array": [(A([]),), ("a",)], "is_string": [("a",), (1,)], "is_int": [(1,), ("1",)],
    "is_bool": [(False,), (0,)], "is_null": [(None,), ("",)],
    "dirname": [(p,) for p in PATHS] + [("/a/b/c", 2), ("a/b/c", 5)],
    "basename": [(p,) for p in PATHS] + [("/a/b.php", ".php"), ("x.php", "x.php")],
    "strlen": [(s,) for s in ["", "abc", "caf\xc3\xa9"]],
    "strtolower": [("MiXeD \xc3\x89",)], "strtoupper": [("mixed \xe9",)],
    "ucfirst": [("hello",), ("",)], "lcfirst": [("HELLO",)],
    "ucwords": [("hello big-world",), ("a-b c", "-")],
    "strrev": [("abc",), ("",)], "strcmp": [("a", "b"), ("b", "a"), ("a", "a"), ("abc", "ab")],
    "str_contains": [("abc", "b"), ("abc", ""), ("abc", "d")],
    "str_starts_with": [("abc", "ab"), ("abc", "")], "str_ends_with": [("abc", "bc"), ("abc", "x")],
    "ord": [("A",), ("",), ("\xff",)], "chr": [(65,), (256 + 66,), (-1,)],
    "md5": [("",), ("abc",), ("\xff",)], "sha1": [("",), ("abc",)], "crc32": [("",), ("The quick brown fox",)],
    "json_encode": [(v,) for v in [None, True, 1, 1.0, 1.5, 0.1, "a/b", "caf\xc3\xa9", '"\\\n', "<>&'",
                                   A([1, 2]), D(("a", 1), ("b", A([]))), D((1, "x")), A([]), "\xff"]]
    + [("a/b", 64), ("caf\xc3\xa9", 256), ("<'&\">", 1 | 2 | 4 | 8),
                                  (D(("a\xe2\x80\xa8/", 1.0), ("x", A([]))), 256 | 1024), (A([]), 16),
                                  (D((1, 1), (2, 2)),)],
    "json_decode": [(s,) for s in ['"a"', "1", "1.5", "true", "null", "[1,2]", '{"a":1}', "bad", '"\\u00e9"']]
    + [('{"a":{"b":2}}', True), ('[{"x":1}]', True), ("1e2", True)],
    "count": [(A([1, 2]),), (A([]),), (D(("a", A([1, 2]))), 1)],
    "sizeof": [(A([1]),)],
    "in_array": [("1", A([1, 2])), ("abc", A([0])), (None, A([""])), ("1", A([1]), True), ("a", A([]))],
    "array_search": [("b", A(["a", "b"])), ("x", A(["a"])), (1, A(["1", 1]), True)],
    "array_key_exists": [("a", D(("a", None))), (0, A(["x"])), ("1", A(["a", "b"])), ("z", A([]))],
    "key_exists": [("k", D(("k", 1)))],
    "array_keys": [(D(("a", 1), (5, 2), ("b", 1)),), (D(("a", 1), ("b", "1"), ("c", 2)), 1), (A([]),)],
    "array_values": [(D(("a", 1), ("b", 2)),)],
    "array_merge": [(A([1, 2]), A([3])), (D(("a", 1)), D(("a", 2), ("b", 3))), (D((5, "x")), D((5, "y"))), (A([]),)],
    "array_pad": [(A([1, 2]), 4, 0), (A([1, 2]), -4, 0), (A([1, 2]), 1, 0), (D(("a", 1), (5, 2)), 4, "p"),
                  (A([12, 10, 9]), 5, "v")],
    "array_slice": [(A([1, 2, 3, 4]), 1), (A([1, 2, 3, 4]), -2, 1), (A([1, 2, 3]), 0, -1),
                    (D((3, "a"), (7, "b")), 1), (D((3, "a"), (7, "b")), 0, 2, True), (D(("x", 1), ("y", 2)), 1)],
    "array_reverse": [(A([1, 2, 3]),), (D(("a", 1), (2, "b")),), (A([1, 2]), True)],
    "array_flip": [(D(("a", 1), ("b", "x")),), (A(["a", "b", "a"]),)],
    "array_combine": [(A(["a", "b"]), A([1, 2])), (A([1, 1]), A(["x", "y"]))],
    "array_fill": [(5, 3, "v"), (-3, 2, 0), (0, 0, 1)],
    "range": [(1, 5), (5, 1), (0, 10, 3), ("a", "e"), (1.0, 2.0, 0.5), (0, 1, 0.25), ("1", "3"),
              (0, 0.3, 0.1), (5, 1, -2), ("a", 5), ("1", "c"), ("", "c"), (1, 3, "1"), (1.5, 1.5),
              (3, 1, 1.5), ("a", "c", 1.5), ("ab", "cd"), ("A", "z", 10), (1, 2, 5), (1, 2, 0), (1, 5, -2)],
    "array_sum": [(A([1, 2, 3]),), (A([1, 2.5]),), (A(["3", "4x"]),), (A([]),)],
    "max": [(1, 5, 3), (A([1, 7, 2]),), ("apple", "banana"), (1, "1")],
    "min": [(4, 2, 8), (A([0, -1]),), ("10", 9)],
    "abs": [(-5,), (3.5,), (-0.0,), ("-3",)],
    "floor": [(1.7,), (-1.2,), (5,)], "ceil": [(1.2,), (-1.7,), (4,)],
}


def random_strings(rng, n):
    alphabet = "ab<>&\"'\\ %+=/.-_\n\t\x00\xc3\xa9\xff01"
    return ["".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12))) for _ in range(n)]


FUZZED_STRING_FUNCS = ["htmlspecialchars", "htmlentities", "htmlspecialchars_decode", "html_entity_decode",
                       "urlencode", "rawurlencode", "urldecode", "rawurldecode", "base64_encode",
                       "base64_decode", "addslashes", "stripslashes", "trim", "nl2br", "strrev",
                       "strtolower", "strtoupper", "ucwords", "json_encode", "basename", "dirname",
                       "is_numeric", "intval", "floatval", "md5", "crc32", "strlen"]


def all_cases():
    rng = random.Random(20240601)
    cases = {k: list(v) for k, v in CASES.items()}
    for name in FUZZED_STRING_FUNCS:
        cases[name].extend((s,) for s in random_strings(rng, 12))
    return cases


PRELUDE = r"""<?php
error_reporting(0);
ini_set('display_errors', '0');
function enc($v) {
    if ($v === null) return ['t' => 'null'];
    if (is_bool($v)) return ['t' => 'bool', 'v' => $v];
    if (is_int($v)) return ['t' => 'int', 'v' => $v];
    if (is_float($v)) return ['t' => 'float', 'hex' => bin2hex(pack('E', $v))];
    if (is_string($v)) return ['t' => 'str', 'b64' => base64_encode($v)];
    if (is_array($v)) { $o = []; foreach ($v as $k => $x) $o[] = [enc($k), enc($x)]; return ['t' => 'array', 'items' => $o]; }
    if (is_object($v)) return ['t' => 'object'];
    return ['t' => 'other'];
}
function run($f) {
    try { $r = $f(); echo json_encode(['ok' => enc($r)]), "\n"; }
    catch (Throwable $e) { echo json_encode(['error' => get_class($e)]), "\n"; }
}
"""


def php_script(name, arg_lists):
    lines = [PRELUDE]
    for args in arg_lists:
        lits = ", ".join(php_literal(a) for a in args)
        lines.append(f"run(function() {{ return {name}({lits}); }});")
    return "\n".join(lines) + "\n"


def run_php(code: str) -> str:
    r = subprocess.run(["node", ORACLE], input=code.encode("latin-1"), capture_output=True, check=True)
    return r.stdout.decode("ascii")


def main(argv):
    names = argv or sorted(all_cases())
    cases = all_cases()
    os.makedirs(OUT, exist_ok=True)
    for name in names:
        if name not in REGISTRY or REGISTRY[name].concrete is None:
            print(f"skip {name}: no concrete implementation", file=sys.stderr)
            continue
        arg_lists = cases[name]
        out = run_php(php_script(name, arg_lists)).strip().split("\n")
        if len(out) != len(arg_lists):
            raise SystemExit(f"{name}: expected {len(arg_lists)} result lines, got {len(out)}")
        vectors = []
        for args, line in zip(arg_lists, out):
            res = json.loads(line)
            entry = {"args": [encode(a) for a in args]}
            if "error" in res:
                entry["error"] = res["error"]
            else:
                if res["ok"]["t"] != "object":
                    decode(res["ok"])           # validates the encoding
                entry["result"] = res["ok"]
            vectors.append(entry)
        with open(os.path.join(OUT, f"{name}.json"), "w", encoding="ascii") as fh:
            json.dump({"function": name, "php": "8.3", "vectors": vectors}, fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(f"{name}: {len(vectors)} vectors")


if __name__ == "__main__":
    main(sys.argv[1:])
