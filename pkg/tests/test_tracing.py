import pytest

from depsim.tracing import MalformedTrace, TraceRecorder, dump_jsonl, dumps_jsonl, iter_kind, load_jsonl


def test_record_fixed_shape():
    rec = TraceRecorder()
    rec.record(5, "send", "a", {"dst": "b"})
    rec.record(5, "deliver", "b", {"src": "a"})
    assert rec.entries == [
        {"t": 5, "seq": 0, "kind": "send", "node": "a", "detail": {"dst": "b"}},
        {"t": 5, "seq": 1, "kind": "deliver", "node": "b", "detail": {"src": "a"}},
    ]


def test_seq_strictly_increasing_across_kinds():
    rec = TraceRecorder()
    for i in range(10):
        rec.record(i, "tick", None, {})
    assert [e["seq"] for e in rec.entries] == list(range(10))


def test_kind_filter_skips_but_keeps_seq_order():
    rec = TraceRecorder(["keep"])
    rec.record(1, "drop_me", "a", {})
    rec.record(2, "keep", "a", {})
    assert not rec.wants("drop_me")
    assert [e["kind"] for e in rec.entries] == ["keep"]


def test_dumps_compact_and_key_order():
    rec = TraceRecorder()
    rec.record(1, "send", "a", {"x": 1})
    line = dumps_jsonl(rec.entries).strip()
    assert line == '{"t":1,"seq":0,"kind":"send","node":"a","detail":{"x":1}}'


def test_file_round_trip(tmp_path):
    rec = TraceRecorder()
    rec.record(1, "a", "n", {"v": [1, 2]})
    rec.record(2, "b", None, {})
    path = tmp_path / "trace.jsonl"
    dump_jsonl(rec.entries, str(path))
    assert load_jsonl(str(path)) == rec.entries


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"t": 1}\nnot json\n')
    with pytest.raises(MalformedTrace):
        load_jsonl(str(path))


def test_load_rejects_missing_fields(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"t": 1, "seq": 0, "kind": "x"}\n')
    with pytest.raises(MalformedTrace):
        load_jsonl(str(path))


def test_iter_kind():
    rec = TraceRecorder()
    rec.record(1, "a", "n", {})
    rec.record(2, "b", "n", {})
    rec.record(3, "a", "m", {})
    assert [e["t"] for e in iter_kind(rec.entries, "a")] == [1, 3]
