from __future__ import annotations

import json

import pytest

from datalake.errors import CorruptJournal
from datalake.journal import BlobStore, Journal


def write_records(root, n):
    j = Journal(root)
    for i in range(n):
        j.append("user-added", {"user": f"u{i}"}, ts=f"t{i}")
    j.close()
    return root / "catalog.jsonl"


def test_append_then_replay(tmp_path):
    path = write_records(tmp_path, 3)
    j = Journal(tmp_path)
    recs = list(j.replay())
    assert [r["seq"] for r in recs] == [1, 2, 3]
    assert [r["payload"]["user"] for r in recs] == ["u0", "u1", "u2"]
    assert j.next_seq == 4
    assert not j.truncated_tail
    # appends continue the sequence
    j.append("user-added", {"user": "u3"}, ts="t3")
    j.close()
    assert json.loads(path.read_bytes().splitlines()[-1])["seq"] == 4


def test_truncated_tail_is_dropped(tmp_path):
    path = write_records(tmp_path, 3)
    raw = path.read_bytes()
    path.write_bytes(raw[:-9])  # tear the final record mid-JSON
    j = Journal(tmp_path)
    recs = list(j.replay())
    assert [r["seq"] for r in recs] == [1, 2]
    assert j.truncated_tail
    assert j.next_seq == 3


def test_corrupt_middle_record_refuses(tmp_path):
    path = write_records(tmp_path, 3)
    lines = path.read_bytes().splitlines(keepends=True)
    lines[1] = b"{garbage\n"
    path.write_bytes(b"".join(lines))
    j = Journal(tmp_path)
    with pytest.raises(CorruptJournal) as exc:
        list(j.replay())
    assert exc.value.bad_seq == 2


def test_sequence_gap_refuses(tmp_path):
    path = write_records(tmp_path, 2)
    rec = {"seq": 9, "ts": "t", "kind": "user-added", "payload": {"user": "x"}}
    with path.open("ab") as fh:
        fh.write((json.dumps(rec) + "\n").encode())
    j = Journal(tmp_path)
    with pytest.raises(CorruptJournal) as exc:
        list(j.replay())
    assert exc.value.bad_seq == 3


def test_blob_store_round_trip(tmp_path):
    blobs = BlobStore(tmp_path)
    digest = blobs.put(b"hello")
    assert digest == blobs.put(b"hello")  # content addressed, idempotent
    assert blobs.get(digest) == b"hello"
    assert digest in blobs
    with pytest.raises(KeyError):
        blobs.get("0" * 64)
