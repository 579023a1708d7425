"""Keyword index over data-item metadata and content, ranked with BM25.

One live document per item, covering its latest version: name, description,
uploader, upload time, workspace path, and either cell content (tables,
capped at the first 10,000 cells) or title/axis labels (charts). Tokens are
lowercased Unicode word characters, no stemming.

Scoring is BM25 with k1 = 1.2, b = 0.75 and the non-negative idf variant

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))

Visibility filtering happens at query time against the catalog, so the
index itself never needs to know about ACL changes. The on-disk form under
<root>/index/ is a cache; it is rebuilt from the catalog when absent or
unreadable.
"""

from __future__ import annotations

import json
import math
import re
import threading
from collections import Counter
from pathlib import Path

from .errors import UnknownItem

K1 = 1.2
B = 0.75
CELL_TOKEN_CAP = 10_000
SNIPPET_TOKENS = 12

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.casefold())


class SearchIndex:
    """In-memory inverted index with a JSON cache file."""

    def __init__(self, root: str | Path):
        self.path = Path(root) / "index" / "documents.json"
        self.docs: dict[str, dict] = {}       # item id -> {"tokens": [...], "text": str}
        self._tf: dict[str, Counter] = {}
        self._df: Counter = Counter()
        self._lens: dict[str, int] = {}
        self._lock = threading.RLock()        # writes serialized, reads consistent
        if self.path.exists():
            try:
                stored = json.loads(self.path.read_text("utf-8"))
                for item_id, doc in stored.items():
                    self._add(item_id, doc)
            except (ValueError, OSError):
                self.docs = {}
                self._tf, self._df, self._lens = {}, Counter(), {}

    # ------------------------------------------------------------------

    def _add(self, item_id: str, doc: dict):
        if item_id in self.docs:
            self._remove(item_id)
        self.docs[item_id] = doc
        tf = Counter(doc["tokens"])
        self._tf[item_id] = tf
        self._lens[item_id] = len(doc["tokens"])
        for t in tf:
            self._df[t] += 1

    def _remove(self, item_id: str):
        tf = self._tf.pop(item_id, None)
        if tf:
            for t in tf:
                self._df[t] -= 1
                if not self._df[t]:
                    del self._df[t]
        self._lens.pop(item_id, None)
        self.docs.pop(item_id, None)

    def _persist(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.docs, ensure_ascii=False), "utf-8")
        tmp.replace(self.path)

    # ------------------------------------------------------------------

    def index_document(self, item_id: str, fields: list[str]):
        """Replace the item's document with one built from the given fields."""
        text = "\n".join(f for f in fields if f)
        with self._lock:
            self._add(item_id, {"tokens": tokenize(text), "text": text})
            self._persist()

    def remove(self, item_id: str):
        with self._lock:
            if item_id not in self.docs:
                raise UnknownItem(f"no indexed document for {item_id!r}")
            self._remove(item_id)
            self._persist()

    def score(self, item_id: str, query_tokens: list[str]) -> float:
        with self._lock:
            tf = self._tf.get(item_id)
            if not tf or not self.docs:
                return 0.0
            n = len(self.docs)
            avgdl = sum(self._lens.values()) / n
            dl = self._lens[item_id]
            norm = K1 * (1 - B + B * dl / avgdl) if avgdl else K1
            s = 0.0
            for t in query_tokens:
                f = tf.get(t)
                if not f:
                    continue
                df = self._df[t]
                idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
                s += idf * f * (K1 + 1) / (f + norm)
            return s

    def search(self, query: str, visible_ids, limit: int = 20) -> list[dict]:
        """Ranked hits over the visible subset; deterministic tie-break by id."""
        q = tokenize(query)
        if not q:
            return []
        hits = []
        with self._lock:
            for item_id in self.docs:
                if item_id not in visible_ids:
                    continue
                s = self.score(item_id, q)
                if s > 0.0:
                    hits.append({"item": item_id, "score": s,
                                 "snippet": self._snippet(item_id, q)})
        hits.sort(key=lambda h: (-h["score"], h["item"]))
        return hits[:limit]

    def _snippet(self, item_id: str, query_tokens: list[str]) -> str:
        tokens = self.docs[item_id]["tokens"]
        qset = set(query_tokens)
        for i, t in enumerate(tokens):
            if t in qset:
                lo = max(0, i - SNIPPET_TOKENS // 2)
                return " ".join(tokens[lo:lo + SNIPPET_TOKENS])
        return " ".join(tokens[:SNIPPET_TOKENS])


def document_fields(name: str, description: str, uploader: str, uploaded_at: str,
                    workspace_path: str, table_cells: list[str] | None = None,
                    chart_labels: list[str] | None = None) -> list[str]:
    """Assemble the indexable field list for an item's latest version."""
    fields = [name, description, uploader, uploaded_at, workspace_path]
    if table_cells is not None:
        fields.extend(table_cells[:CELL_TOKEN_CAP])
    if chart_labels is not None:
        fields.extend(chart_labels)
    return fields
