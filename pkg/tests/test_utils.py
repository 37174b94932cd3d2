"""Tests for shared helpers."""

import json

import pytest

from midiforge.utils import derive_seed, midi_files, oxford_join, read_jsonl, resolve_path, write_jsonl


def test_derive_seed_is_stable():
    assert derive_seed(1, "batch", 3) == derive_seed(1, "batch", 3)
    assert derive_seed(1, "batch", 3) != derive_seed(1, "batch", 4)
    assert 0 <= derive_seed("x") < 2 ** 63


@pytest.mark.parametrize("items,expected", [
    ([], ""),
    (["violin"], "violin"),
    (["viola", "violin"], "viola and violin"),
    (["cello", "viola", "violin"], "cello, viola, and violin"),
])
def test_oxford_join(items, expected):
    assert oxford_join(items) == expected


def test_jsonl_roundtrip(tmp_path):
    path = str(tmp_path / "a.jsonl")
    records = [{"b": 1, "a": "x"}, {"c": [1, 2]}]
    assert write_jsonl(path, records) == 2
    assert list(read_jsonl(path)) == records
    first = open(path).readline()
    assert list(json.loads(first)) == ["b", "a"]


def test_read_jsonl_reports_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"a": 1}\n\nnot json\n')
    with pytest.raises(ValueError, match=":3:"):
        list(read_jsonl(str(path)))


def test_midi_files(tmp_path):
    for name in ("b.mid", "a.MIDI", "c.txt"):
        (tmp_path / name).write_bytes(b"")
    assert [p.name for p in midi_files(str(tmp_path))] == ["a.MIDI", "b.mid"]


def test_resolve_path(tmp_path):
    assert resolve_path("x.mid", "/data") == "/data/x.mid"
    assert resolve_path("/abs/x.mid", "/data") == "/abs/x.mid"
