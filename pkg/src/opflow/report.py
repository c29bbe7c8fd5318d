"""Report assembly: JSON and text renderings of per-entry results."""

from __future__ import annotations

import json

from .engine import EntryResult, Finding
from .rules import VULN_CLASSES

TOOL = "opflow"
VERSION = "0.1.0"
SCHEMA_VERSION = 1


def relpath(path: str, root: str) -> str:
    """``path`` relative to ``root`` when inside it; eval pseudo-paths included."""
    if root and root != "/" and path.startswith(root + "/"):
        return path[len(root) + 1:]
    return path


def finding_dict(f: Finding, root: str) -> dict:
    return {
        "vuln_class": f.vuln_class,
        "sink": {"file": relpath(f.file, root), "line": f.line, "callee": f.callee, "arg": f.arg},
        "sources": [{"kind": s.source_kind, "file": relpath(s.file, root), "line": s.line,
                     "path": s.access_path, "expr": s.describe()} for s in f.sources],
        "trace": [{"file": relpath(file, root), "line": line, "step": desc}
                  for file, line, desc in f.trace],
    }


def entry_dict(r: EntryResult, root: str, timing: bool) -> dict:
    stats = {"oplines": r.oplines}
    if timing:
        stats["wall_time_s"] = round(r.seconds, 6)
    return {
        "entry": relpath(r.entry, root),
        "status": "error" if r.error else "ok",
        "error": r.error,
        "findings": [finding_dict(f, root) for f in r.findings],
        "stats": stats,
        "notes": [relpath_text(n, root) for n in r.notes],
    }


def relpath_text(text: str, root: str) -> str:
    if root and root != "/":
        return text.replace(root + "/", "")
    return text


def build_report(results, root: str, compile_errors=None, timing=False) -> dict:
    entries = sorted((entry_dict(r, root, timing) for r in results), key=lambda e: e["entry"])
    totals = {c: 0 for c in VULN_CLASSES}
    for e in entries:
        for f in e["findings"]:
            totals[f["vuln_class"]] += 1
    errors = [{"file": relpath(p, root), "message": relpath_text(m, root)}
              for p, m in sorted((compile_errors or {}).items())]
    return {
        "tool": TOOL,
        "version": VERSION,
        "schema_version": SCHEMA_VERSION,
        "entries": entries,
        "totals": totals,
        "findings_total": sum(totals.values()),
        "compile_errors": errors,
    }


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


def render_text(report: dict) -> str:
    lines = []
    for e in report["entries"]:
        head = f"== {e['entry']}"
        if e["status"] == "error":
            head += f"  [error: {e['error']}]"
        lines.append(head)
        for f in e["findings"]:
            s = f["sink"]
            srcs = ", ".join(f"{x['expr']} ({x['file']}:{x['line']})" for x in f["sources"])
            lines.append(f"  {f['vuln_class']:<5} {s['file']}:{s['line']}  {s['callee']} "
                         f"arg {s['arg']}  <- {srcs}")
            for t in f["trace"]:
                lines.append(f"        {t['file']}:{t['line']}  {t['step']}")
    for err in report["compile_errors"]:
        lines.append(f"compile error: {err['file']}: {err['message']}")
    counts = ", ".join(f"{k}={v}" for k, v in report["totals"].items() if v)
    lines.append(f"{report['findings_total']} finding(s)" + (f": {counts}" if counts else ""))
    return "\n".join(lines) + "\n"


__all__ = ["build_report", "render_json", "render_text", "relpath"]
