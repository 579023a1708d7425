"""CSV parsing, semantic column-type inference, and schema approval.

Inference is a deterministic rule chain (the pluggable external inferrer can
override it, see ExternalInferrer): URL, then Temporal, then Numerical, then
Location, then Categorical, then Text. A predicate rule wins when at least
95% of the non-empty samples match it (50% for Location, which only needs a
recognizable majority of place names); its confidence is the fraction of all
samples matching, so missing cells depress confidence without changing the
winner. Categorical wins when the distinct ratio over non-empty samples is
at most 0.5.

Parse-time normalization maps the usual annotations for missing data (N/A,
NA, (Unreliable)) to the empty string, the single internal missing marker.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

from . import gazetteer
from .errors import EmptyInput, UnknownColumn, Unparseable
from .table import ColumnType, parse_number, is_temporal

PREDICATE_GATE = 0.95
LOCATION_GATE = 0.5
CATEGORICAL_DISTINCT_RATIO = 0.5
DEFAULT_SAMPLE_SIZE = 100
MAX_SAMPLE_VALUES = 5

MISSING_MARKERS = frozenset({"N/A", "n/a", "NA", "na", "(Unreliable)", "(unreliable)"})

_URL_RE = re.compile(r"^(https?://|ftp://|www\.)\S+$", re.IGNORECASE)


@dataclass
class RawTable:
    headers: list[str]
    rows: list[list[str]]
    source_note: str = ""
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ColumnProposal:
    name: str
    inferred_type: ColumnType
    confidence: float
    samples: tuple[str, ...]
    overridden: bool = False


@dataclass(frozen=True)
class SchemaProposal:
    columns: tuple[ColumnProposal, ...]
    status: str = "pending"  # pending | approved
    approved_by: str | None = None

    @property
    def approved(self) -> bool:
        return self.status == "approved"

    def types(self) -> list[ColumnType]:
        return [c.inferred_type for c in self.columns]

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "columns": [
                {
                    "name": c.name,
                    "inferred_type": c.inferred_type.value,
                    "confidence": c.confidence,
                    "samples": list(c.samples),
                    "overridden": c.overridden,
                }
                for c in self.columns
            ],
        }


def parse_csv(data: bytes, delimiter: str = ",", quote: str = '"',
              has_header: bool = True) -> RawTable:
    """Parse CSV bytes into a rectangular RawTable.

    UTF-8 with Latin-1 fallback; RFC-4180-style quoting. Ragged rows are
    padded with empty cells (rows wider than the header grow generated
    columns); both are reported in ``warnings``. Raises empty-input for
    blank payloads and unparseable when the csv machinery gives up.
    """
    if not data or not data.strip():
        raise EmptyInput("no CSV content")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        text = data.decode("latin-1")
    try:
        records = list(csv.reader(io.StringIO(text, newline=""),
                                  delimiter=delimiter, quotechar=quote))
    except (csv.Error, TypeError, ValueError) as e:
        raise Unparseable(f"CSV parse failed: {e}") from None
    records = [r for r in records if r]  # drop fully blank lines
    if not records:
        raise EmptyInput("no CSV rows")

    warnings: list[str] = []
    if has_header:
        headers, rows = records[0], records[1:]
    else:
        headers, rows = [f"column_{i + 1}" for i in range(len(records[0]))], records

    headers = [h.strip() for h in headers]
    for i, h in enumerate(headers):
        if not h:
            headers[i] = f"column_{i + 1}"
            warnings.append(f"empty header at position {i + 1} renamed to {headers[i]}")
    seen: dict[str, int] = {}
    for i, h in enumerate(headers):
        if h in seen:
            seen[h] += 1
            headers[i] = f"{h}_{seen[h]}"
            warnings.append(f"duplicate header {h!r} renamed to {headers[i]}")
        else:
            seen[h] = 1

    width = max([len(headers)] + [len(r) for r in rows])
    if width > len(headers):
        extra = [f"column_{i + 1}" for i in range(len(headers), width)]
        warnings.append(f"rows wider than header; added {', '.join(extra)}")
        headers = headers + extra
    fixed: list[list[str]] = []
    ragged = 0
    for r in rows:
        cells = [("" if c.strip() in MISSING_MARKERS else c) for c in r]
        if len(cells) != width:
            ragged += 1
            cells = cells + [""] * (width - len(cells))
        fixed.append(cells)
    if ragged:
        warnings.append(f"padded {ragged} ragged row(s) with empty cells")
    return RawTable(headers=headers, rows=fixed, warnings=warnings)


def _is_url(cell: str) -> bool:
    return bool(_URL_RE.match(cell.strip()))


def _is_number(cell: str) -> bool:
    return parse_number(cell) is not None


_PREDICATE_RULES: list[tuple[ColumnType, Callable[[str], bool], float]] = [
    (ColumnType.URL, _is_url, PREDICATE_GATE),
    (ColumnType.TEMPORAL, lambda c: is_temporal(c), PREDICATE_GATE),
    (ColumnType.NUMERICAL, _is_number, PREDICATE_GATE),
    (ColumnType.LOCATION, gazetteer.looks_location, LOCATION_GATE),
]


def _infer_column(name: str, samples: list[str]) -> ColumnProposal:
    nonempty = [s for s in samples if s.strip()]
    total = len(samples)

    def proposal(ctype: ColumnType, confidence: float) -> ColumnProposal:
        distinct: list[str] = []
        for s in nonempty:
            if s not in distinct:
                distinct.append(s)
            if len(distinct) == MAX_SAMPLE_VALUES:
                break
        return ColumnProposal(name=name, inferred_type=ctype,
                              confidence=round(confidence, 6), samples=tuple(distinct))

    if nonempty and total:
        for ctype, pred, gate in _PREDICATE_RULES:
            hits = sum(1 for s in nonempty if pred(s))
            if hits / len(nonempty) >= gate:
                return proposal(ctype, hits / total)
        if len(set(nonempty)) / len(nonempty) <= CATEGORICAL_DISTINCT_RATIO:
            return proposal(ColumnType.CATEGORICAL, len(nonempty) / total)
    return proposal(ColumnType.TEXT, (len(nonempty) / total) if total else 0.0)


def infer_column_types(table: RawTable, sample_size: int = DEFAULT_SAMPLE_SIZE) -> SchemaProposal:
    """Propose one (type, confidence) per column from the first sample_size rows."""
    if not table.headers:
        raise EmptyInput("table has no columns")
    window = table.rows[:sample_size]
    cols = []
    for i, name in enumerate(table.headers):
        cols.append(_infer_column(name, [r[i] for r in window]))
    return SchemaProposal(columns=tuple(cols))


def approve_schema(proposal: SchemaProposal, corrections: dict[str, ColumnType],
                   actor: str) -> SchemaProposal:
    """Apply human corrections and mark the proposal approved.

    Corrected columns are flagged ``overridden`` so the record of what the
    human changed survives into the ingestion provenance.
    """
    known = {c.name for c in proposal.columns}
    for col in corrections:
        if col not in known:
            raise UnknownColumn(f"no column {col!r} in proposal")
    columns = tuple(
        replace(c, inferred_type=ColumnType(corrections[c.name]), overridden=True)
        if c.name in corrections else c
        for c in proposal.columns
    )
    return SchemaProposal(columns=columns, status="approved", approved_by=actor)


class ExternalInferrer(Protocol):
    """Hook matching infer_column_types; a network-backed implementation may
    replace the rule engine at service construction time. Disabled in tests."""

    def __call__(self, table: RawTable, sample_size: int = DEFAULT_SAMPLE_SIZE) -> SchemaProposal: ...
