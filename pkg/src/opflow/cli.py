"""Command line: ``opflow analyze <paths...>``.

Exit codes: 0 no findings, 1 findings, 2 usage or configuration error,
3 internal analysis error on at least one entry.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor

from .cfg import build_cfg, dump_cfg_dot
from .config import AnalysisConfig, ConfigError
from .engine import Analyzer
from .project import LoadError, dump_opcodes, enumerate_entries, load_project
from .report import build_report, render_json, render_text
from .rules import RulesError, load_rules

log = logging.getLogger("opflow")

EXIT_CLEAN, EXIT_FINDINGS, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="opflow", description="Static taint analysis for PHP.")
    sub = p.add_subparsers(dest="command")
    a = sub.add_parser("analyze", help="analyze files or directories")
    a.add_argument("paths", nargs="+")
    a.add_argument("--rules", help="rules file merged over the defaults (fallback: $OPFLOW_RULES)")
    a.add_argument("--format", choices=("json", "text"), default="json")
    a.add_argument("--out", help="write the report here instead of standard output")
    a.add_argument("--include-path", action="append", default=None, metavar="DIR",
                   help="initial include_path entry (repeatable; default '.')")
    a.add_argument("--cwd", help="initial working directory (default: each entry's directory)")
    a.add_argument("--max-loop-iterations", type=int, default=256)
    a.add_argument("--max-call-depth", type=int, default=64)
    a.add_argument("--branch-split-budget", type=int, default=1024)
    a.add_argument("--entry", action="append", default=[], metavar="GLOB",
                   help="entry file glob relative to the common root (repeatable)")
    a.add_argument("--dump-opcodes", action="store_true", help="write <file>.opcode beside sources")
    a.add_argument("--dump-cfg", action="store_true", help="write <file>.<unit>.dot beside sources")
    a.add_argument("--jobs", type=int, default=1, help="analyze entries in N processes")
    a.add_argument("--timing", action="store_true", help="include wall time in the report")
    a.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns) -> AnalysisConfig:
    cwd = os.path.abspath(ns.cwd) if ns.cwd else None
    return AnalysisConfig(
        entry_globs=list(ns.entry),
        include_path=list(ns.include_path) if ns.include_path else ["."],
        cwd=cwd,
        max_loop_iterations=ns.max_loop_iterations,
        max_call_depth=ns.max_call_depth,
        branch_split_budget=ns.branch_split_budget,
        rules_file=ns.rules,
        output_format=ns.format,
        dump_opcodes=ns.dump_opcodes,
        dump_cfg=ns.dump_cfg,
        timing=ns.timing,
        jobs=ns.jobs,
    ).validate()


# Worker state for --jobs: each process loads the project once.
_WORKER = {}


def _worker_init(paths, config, rules_path):
    _WORKER["project"] = load_project(paths)
    _WORKER["rules"] = load_rules(rules_path)
    _WORKER["config"] = config


def _worker_run(entry):
    proj = _WORKER["project"]
    return Analyzer(proj.db, _WORKER["rules"], _WORKER["config"]).analyze_entry(entry)


def run_entries(proj, entries, rules, config, paths):
    if config.jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs, initializer=_worker_init,
                                 initargs=(paths, config, config.rules_file)) as pool:
            return list(pool.map(_worker_run, entries))
    return [Analyzer(proj.db, rules, config).analyze_entry(e) for e in entries]


def _dump_cfgs(proj):
    db = proj.db
    for f in proj.sources:
        units = [db.files[f]] + list(db.file_functions.get(f, {}).values())
        for cm in db.file_classes.get(f, {}).values():
            units.extend(cm.methods.values())
        for u in units:
            name = re.sub(r"[^A-Za-z0-9_.-]+", "_", u.name if u is not db.files[f] else "main")
            with open(f"{f}.{name}.dot", "wb") as fh:
                fh.write(dump_cfg_dot(build_cfg(u)))


def analyze(ns) -> int:
    config = config_from_args(ns)
    rules = load_rules(config.rules_file)
    proj = load_project(ns.paths)
    for path, msg in sorted(proj.db.errors.items()):
        print(f"opflow: {msg}" if msg.startswith(path) else f"opflow: {path}: {msg}", file=sys.stderr)
    for n in proj.notes:
        log.info(n)
    entries = enumerate_entries(proj, config.entry_globs)
    if not entries:
        raise _UsageError("no entries")
    if config.dump_opcodes:
        dump_opcodes(proj)
    if config.dump_cfg:
        _dump_cfgs(proj)
    config.rules_file = config.rules_file or os.environ.get("OPFLOW_RULES") or None
    results = run_entries(proj, entries, rules, config, ns.paths)
    report = build_report(results, proj.root, proj.db.errors, config.timing)
    text = render_json(report) if config.output_format == "json" else render_text(report)
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"opflow: {r.entry}: analysis error: {r.error}", file=sys.stderr)
    if failed:
        return EXIT_INTERNAL
    return EXIT_FINDINGS if report["findings_total"] else EXIT_CLEAN


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command != "analyze":
            raise _UsageError("missing command (try: opflow analyze <paths...>)")
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="opflow: %(message)s", stream=sys.stderr)
        return analyze(ns)
    except (_UsageError, ConfigError, RulesError, LoadError) as e:
        print(f"opflow: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"opflow: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
