"""Concrete builtin implementations against vectors recorded from PHP 8.3."""

import glob
import json
import os

import pytest

from opflow.builtins import REGISTRY, NotConcrete
from opflow.phpsem import PhpRuntimeError
from opflow.vectors import decode, encode

VECTOR_DIR = os.path.join(os.path.dirname(__file__), "vectors")
FILES = sorted(glob.glob(os.path.join(VECTOR_DIR, "*.json")))


def check_vector_file(path):
    """Returns a list of mismatch descriptions (empty when all match)."""
    with open(path, encoding="ascii") as fh:
        doc = json.load(fh)
    impl = REGISTRY[doc["function"]].concrete
    bad = []
    for i, vec in enumerate(doc["vectors"]):
        args = [decode(a) for a in vec["args"]]
        want = vec.get("result")
        try:
            got = impl(*args)
        except NotConcrete:
            if want is None or want["t"] != "object":
                bad.append(f"#{i} {args!r}: not concrete, PHP gave {vec}")
            continue
        except (PhpRuntimeError, TypeError, ValueError) as e:
            if "error" not in vec:
                bad.append(f"#{i} {args!r}: raised {e!r}, PHP gave {decode(want)!r}")
            continue
        if "error" in vec:
            bad.append(f"#{i} {args!r}: returned {got!r}, PHP raised {vec['error']}")
        elif want["t"] == "object" or encode(got) != want:
            bad.append(f"#{i} {args!r}: got {got!r}, PHP gave {vec['result']}")
    return bad


def test_every_concrete_builtin_has_vectors():
    covered = {os.path.basename(f)[:-5] for f in FILES}
    missing = sorted(n for n, m in REGISTRY.items() if m.concrete is not None and n not in covered)
    assert missing == []


@pytest.mark.parametrize("path", FILES, ids=[os.path.basename(f)[:-5] for f in FILES])
def test_vectors_match_php(path):
    assert check_vector_file(path) == []
