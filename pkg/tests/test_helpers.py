"""Tests for helper functions in utils/helpers.py."""

import json
from unittest.mock import patch

import pytest

from utils.helpers import atomic_write_bytes, atomic_write_text, canonical_json, git_blob_sha1


def test_atomic_write_creates_parents(tmp_path):
    path = atomic_write_text(tmp_path / "a" / "b" / "report.json", "{}\n")
    assert path.read_text() == "{}\n"
    assert [p.name for p in path.parent.iterdir()] == ["report.json"]


def test_atomic_write_replaces_existing(tmp_path):
    target = tmp_path / "blob.bin"
    target.write_bytes(b"old")
    atomic_write_bytes(target, b"new")
    assert target.read_bytes() == b"new"


def test_failed_rename_leaves_no_temp_file(tmp_path):
    """A rename that keeps failing removes the temp file and re-raises."""
    target = tmp_path / "blob.bin"
    with patch("utils.helpers.os.replace", side_effect=OSError("disk gone")):
        with patch("tenacity.nap.time.sleep"):
            with pytest.raises(OSError, match="disk gone"):
                atomic_write_bytes(target, b"data")
    assert list(tmp_path.iterdir()) == []


def test_canonical_json_is_sorted_and_stable():
    text = canonical_json({"b": 1, "a": [1.5, "x"]})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1.5, "x"], "b": 1}
    assert canonical_json({"a": [1.5, "x"], "b": 1}) == text


def test_git_blob_sha1_matches_git(tmp_path):
    """Same digest as `git hash-object` for "hello\\n"."""
    path = tmp_path / "hello.txt"
    path.write_bytes(b"hello\n")
    assert git_blob_sha1(path) == "ce013625030ba8dba906f756967f9e9ca394464a"
