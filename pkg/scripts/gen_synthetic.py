"""Generate a deterministic synthetic PHP project for throughput testing.

Usage: python3 scripts/gen_synthetic.py OUT_DIR [--kloc 50] [--seed 0]

The project mixes library files (functions and classes) with page files that
include them, read request data, branch, loop, sanitize and reach sinks.
Line counts exclude blank lines.
"""

from __future__ import annotations

import argparse
import os
import random

SOURCES = ["$_GET", "$_POST", "$_COOKIE", "$_REQUEST"]
SANITIZERS = ["htmlspecialchars", "intval", "addslashes", "urlencode", "trim", "strtoupper"]
SINKS = ["echo {};", "print {};", "mysql_query(\"SELECT * FROM t WHERE a = '\" . {} . \"'\");",
         "system(\"ls \" . {});", "file_get_contents({});", "unlink({});"]


class _Writer:
    def __init__(self):
        self.lines = []
        self.depth = 0

    def line(self, text=""):
        self.lines.append(("    " * self.depth + text) if text else "")

    def open(self, text):
        self.line(text + " {")
        self.depth += 1

    def close(self, suffix=""):
        self.depth -= 1
        self.line("}" + suffix)

    def text(self):
        return "\n".join(self.lines) + "\n"

    def loc(self):
        return sum(1 for x in self.lines if x.strip())


def library(r: random.Random, k: int) -> _Writer:
    w = _Writer()
    w.line("<?php")
    for j in range(6):
        w.open(f"function lib{k}_f{j}($a, $b = '')")
        w.line(f"$s = $a . '-{j}-' . $b;")
        w.open(f"if (strlen($s) > {r.randint(3, 40)})")
        w.line(f"$s = substr($s, 0, {r.randint(2, 30)});")
        w.close()
        w.open("for ($i = 0; $i < 3; $i++)")
        w.line("$s .= $i;")
        w.close()
        if r.random() < 0.3:
            w.line(f"$s = {r.choice(SANITIZERS)}($s);")
        w.line("return $s;")
        w.close()
        w.line()
    w.open(f"class Lib{k}Store")
    w.line("public $items = array();")
    w.line("public $name = 'store';")
    w.open("function add($k, $v)")
    w.line("$this->items[$k] = $v;")
    w.line("return $this;")
    w.close()
    w.open("function get($k)")
    w.open("if (isset($this->items[$k]))")
    w.line("return $this->items[$k];")
    w.close()
    w.line("return '';")
    w.close()
    w.open("function render()")
    w.line("$out = '';")
    w.open("foreach ($this->items as $k => $v)")
    w.line("$out .= '<li>' . $k . '=' . $v . '</li>';")
    w.close()
    w.line("return $out;")
    w.close()
    w.close()
    return w


def page(r: random.Random, k: int, n_libs: int, target: int) -> _Writer:
    w = _Writer()
    w.line("<?php")
    libs = r.sample(range(n_libs), min(2, n_libs))
    for lib in libs:
        w.line(f"include_once 'lib/lib{lib}.php';")
    w.line(f"$store = new Lib{libs[0]}Store();")
    block = 0
    while w.loc() < target:
        src = r.choice(SOURCES)
        v = f"$v{block}"
        w.line(f"{v} = {src}['p{r.randint(0, 9)}'];")
        kind = r.randrange(6)
        if kind == 0:
            w.open(f"if ({v} == 'x{block}')")
            w.line(f"{v} = {r.choice(SANITIZERS)}({v});")
            w.close(" else {")
            w.depth += 1
            w.line(f"{v} = lib{libs[-1]}_f{r.randrange(6)}({v}, 'k');")
            w.close()
        elif kind == 1:
            w.line(f"$arr{block} = array('a' => {v}, 'b' => 'const', {r.randint(0, 9)});")
            w.open(f"foreach ($arr{block} as $key => $item)")
            w.line(f"$store->add($key, $item);")
            w.close()
            w.line(f"{v} = $store->get('{r.choice('ab')}');")
        elif kind == 2:
            w.line(f"$acc{block} = '';")
            w.open(f"for ($i = 0; $i < {r.randint(2, 6)}; $i++)")
            w.line(f"$acc{block} .= {v} . $i;")
            w.close()
            w.line(f"{v} = $acc{block};")
        elif kind == 3:
            w.open(f"switch ({src}['mode'])")
            w.line("case 'a':")
            w.line(f"    {v} = {r.choice(SANITIZERS)}({v});")
            w.line("    break;")
            w.line("case 'b':")
            w.line(f"    {v} = \"pre-{{{v}}}-post\";")
            w.line("    break;")
            w.line("default:")
            w.line(f"    {v} = 'fixed';")
            w.close()
        elif kind == 4:
            w.line(f"{v} = lib{libs[0]}_f{r.randrange(6)}({v});")
            w.line(f"{v} = str_replace('a', 'b', {v});")
        else:
            w.line(f"$n{block} = count(explode(',', {v}));")
            w.open(f"if ($n{block} > 2)")
            w.line(f"{v} = implode(';', array({v}, $n{block}));")
            w.close()
        w.line(r.choice(SINKS).format(v))
        block += 1
    w.line("echo $store->render();")
    return w


def generate(out: str, kloc: int = 50, seed: int = 0) -> int:
    """Write the project under ``out``; returns the non-blank line count."""
    r = random.Random(seed)
    os.makedirs(os.path.join(out, "lib"), exist_ok=True)
    n_libs = max(2, kloc // 2)
    total = 0
    for k in range(n_libs):
        w = library(r, k)
        total += w.loc()
        with open(os.path.join(out, "lib", f"lib{k}.php"), "w", encoding="ascii") as fh:
            fh.write(w.text())
    k = 0
    while total < kloc * 1000:
        w = page(r, k, n_libs, min(250, kloc * 1000 - total + 1))
        total += w.loc()
        with open(os.path.join(out, f"page{k:04d}.php"), "w", encoding="ascii") as fh:
            fh.write(w.text())
        k += 1
    return total


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--kloc", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args(argv)
    print(generate(ns.out, ns.kloc, ns.seed))


if __name__ == "__main__":
    main()
