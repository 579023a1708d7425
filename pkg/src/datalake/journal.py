"""Append-only metadata journal and the content-addressed blob store.

Layout under the store root:

    catalog.jsonl       one UTF-8 JSON record per line: {seq, ts, kind, payload}
    blobs/<hex-sha256>  raw canonical CSV bytes or chart-data documents
    index/              search module's files (a rebuildable cache)

Write protocol: blob bytes land before the journal record that references
them; a record is acknowledged only after the line (with trailing newline)
is flushed and fsynced. Recovery therefore trusts every complete line and
discards at most one trailing partial record. A malformed or out-of-sequence
record anywhere before EOF means real corruption and startup refuses.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from .errors import CorruptJournal
from .table import content_hash

logger = logging.getLogger(__name__)

JOURNAL_NAME = "catalog.jsonl"
BLOB_DIR = "blobs"
INDEX_DIR = "index"


class Journal:
    """Sequenced append-only record log with truncation-tolerant replay."""

    def __init__(self, root: str | os.PathLike, fsync: bool = True):
        self.root = Path(root)
        self.path = self.root / JOURNAL_NAME
        self.fsync = fsync
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / BLOB_DIR).mkdir(exist_ok=True)
        (self.root / INDEX_DIR).mkdir(exist_ok=True)
        self._fh = None
        self.next_seq = 1
        self.truncated_tail = False

    def replay(self):
        """Yield all acknowledged records; sets next_seq past the last one."""
        self.next_seq = 1
        self.truncated_tail = False
        if not self.path.exists():
            return
        with self.path.open("rb") as fh:
            raw = fh.read()
        lines = raw.split(b"\n")
        # A well-formed journal ends with a newline, so the final split piece
        # is empty; anything else is a partial record from a crashed write.
        trailing = lines.pop() if lines else b""
        for i, line in enumerate(lines):
            if not line:
                raise CorruptJournal(f"blank journal line at record {i + 1}", bad_seq=self.next_seq)
            try:
                rec = json.loads(line.decode("utf-8"))
                seq = rec["seq"]
                rec["kind"], rec["payload"]  # shape check
            except (ValueError, KeyError, TypeError, UnicodeDecodeError):
                # Last complete-looking line may still be a torn write.
                if i == len(lines) - 1 and not trailing:
                    self.truncated_tail = True
                    logger.warning("ignoring torn final journal record (expected seq %d)", self.next_seq)
                    return
                raise CorruptJournal(f"unreadable journal record", bad_seq=self.next_seq) from None
            if seq != self.next_seq:
                raise CorruptJournal(f"journal sequence gap: expected {self.next_seq}, found {seq}", bad_seq=self.next_seq)
            self.next_seq = seq + 1
            yield rec
        if trailing:
            self.truncated_tail = True
            logger.warning("ignoring truncated final journal record (expected seq %d)", self.next_seq)

    def append(self, kind: str, payload: dict, ts: str) -> dict:
        rec = {"seq": self.next_seq, "ts": ts, "kind": kind, "payload": payload}
        line = json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n"
        if self._fh is None:
            self._fh = self.path.open("ab")
        self._fh.write(line.encode("utf-8"))
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())
        self.next_seq += 1
        return rec

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class BlobStore:
    """Content-addressed blob files keyed by hex sha256."""

    def __init__(self, root: str | os.PathLike):
        self.dir = Path(root) / BLOB_DIR
        self.dir.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes) -> str:
        digest = content_hash(data)
        path = self.dir / digest
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return digest

    def get(self, digest: str) -> bytes:
        path = self.dir / digest
        if not path.exists():
            raise KeyError(digest)
        return path.read_bytes()

    def __contains__(self, digest: str) -> bool:
        return (self.dir / digest).exists()
