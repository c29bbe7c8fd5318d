"""Loading source trees into a ProgramDb and choosing entry files."""

from __future__ import annotations

import fnmatch
import os
import posixpath
from dataclasses import dataclass, field

from .dump import DumpError, read_dump, write_dump
from .frontend import LexError, LowerError, ParseError, compile_source
from .ir import ProgramDb, UnitKind

PHP_SUFFIXES = (".php", ".inc", ".phtml")
DUMP_SUFFIX = ".opcode"


class LoadError(Exception):
    pass


@dataclass
class Project:
    db: ProgramDb
    root: str                                   # common directory for relative paths
    sources: list = field(default_factory=list)     # loaded file paths, sorted
    notes: list = field(default_factory=list)


def _norm(p: str) -> str:
    return posixpath.normpath(os.path.abspath(p).replace(os.sep, "/"))


def _walk(path):
    if os.path.isfile(path):
        yield _norm(path)
        return
    for dirpath, dirnames, filenames in os.walk(path):
        dirnames.sort()
        for name in sorted(filenames):
            if name.endswith(PHP_SUFFIXES) or name.endswith(DUMP_SUFFIX):
                yield _norm(os.path.join(dirpath, name))


def load_project(paths) -> Project:
    """Compile every PHP file (and read every ``.opcode`` dump) under ``paths``."""
    files = []
    roots = []
    for p in paths:
        if not os.path.exists(p):
            raise LoadError(f"{p}: no such file or directory")
        roots.append(_norm(p) if os.path.isdir(p) else posixpath.dirname(_norm(p)))
        files.extend(_walk(p))
    files = sorted(set(files))
    root = posixpath.commonpath(roots) if roots else "/"
    db = ProgramDb()
    proj = Project(db, root)
    for f in files:
        try:
            with open(f, "rb") as fh:
                data = fh.read()
        except OSError as e:
            db.errors[f] = f"cannot read: {e.strerror}"
            continue
        if f.endswith(DUMP_SUFFIX):
            _add_dump(proj, f, data)
            continue
        try:
            main, funcs, classes = compile_source(data, f)
        except (LexError, ParseError, LowerError) as e:
            db.errors[f] = str(e)
            continue
        proj.notes.extend(db.add_file(f, main, funcs, classes))
        proj.sources.append(f)
    proj.notes.extend(db.check_inheritance())
    return proj


def _add_dump(proj, path, data):
    db = proj.db
    try:
        units, classes = read_dump(data)
    except DumpError as e:
        db.errors[path] = str(e)
        return
    mains = [u for u in units if u.kind is UnitKind.FILE_MAIN]
    if len(mains) != 1:
        db.errors[path] = f"dump must hold exactly one FILE_MAIN unit, found {len(mains)}"
        return
    main = mains[0]
    src = main.file or main.name
    target = _norm(os.path.join(os.path.dirname(path), src)) if src else path
    if target in db.files:
        proj.notes.append(f"{path}: skipped, {target} already loaded from source")
        return
    main.file = target
    funcs = [u for u in units if u.kind is not UnitKind.FILE_MAIN]
    for u in funcs:
        u.file = u.file or target
    for cm in classes:
        cm.file = cm.file or target
        for m in cm.methods.values():
            m.file = m.file or target
    proj.notes.extend(db.add_file(target, main, funcs, classes))
    proj.sources.append(target)


def glob_match(rel: str, pattern: str) -> bool:
    """fnmatch with a leading ``**/`` also matching zero directories."""
    if fnmatch.fnmatchcase(rel, pattern):
        return True
    while pattern.startswith("**/"):
        pattern = pattern[3:]
        if fnmatch.fnmatchcase(rel, pattern):
            return True
    return False


def enumerate_entries(proj: Project, globs) -> list:
    """Loaded files matching any glob (relative to the project root), sorted."""
    out = []
    for f in sorted(proj.db.files):
        rel = posixpath.relpath(f, proj.root)
        if not globs or any(glob_match(rel, g) or glob_match(f, g) for g in globs):
            out.append(f)
    return out


def dump_opcodes(proj: Project) -> list:
    """Write ``<file>.opcode`` beside each compiled PHP file; returns written paths."""
    written = []
    db = proj.db
    for f in proj.sources:
        if f.endswith(DUMP_SUFFIX) or f not in db.files:
            continue
        units = [db.files[f]] + sorted(db.file_functions.get(f, {}).values(), key=lambda u: u.name)
        classes = sorted(db.file_classes.get(f, {}).values(), key=lambda c: c.name)
        out = f + DUMP_SUFFIX
        with open(out, "wb") as fh:
            fh.write(write_dump(units, classes))
        written.append(out)
    return written
