import os

import pytest

from conftest import CORPUS
from opflow.manifest import load_manifest, run_fixture

MANIFEST = os.path.join(CORPUS, "manifest.json")
FIXTURES = load_manifest(MANIFEST)


def test_manifest_ids_are_unique():
    ids = [f["id"] for f in FIXTURES]
    assert len(ids) == len(set(ids))


def test_every_fixture_directory_exists():
    for f in FIXTURES:
        assert os.path.isfile(os.path.join(CORPUS, f["path"], f["entry"])), f["id"]


@pytest.mark.parametrize("fixture", FIXTURES, ids=[f["id"] for f in FIXTURES])
def test_fixture(fixture):
    out = run_fixture(fixture, CORPUS)
    assert out.error is None
    assert out.got == out.expected
