"""Typed tables and their canonical CSV form.

A table is rectangular string data plus one semantic type per column. All
cells are stored as strings; the empty string is the sole missing marker.
Content addressing depends on the canonical serialization being stable:
comma delimiter, minimal RFC-4180 quoting, ``\\n`` line ends, header row
first, UTF-8. Never change it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import re
from dataclasses import dataclass, field
from enum import Enum


class ColumnType(str, Enum):
    CATEGORICAL = "Categorical"
    NUMERICAL = "Numerical"
    LOCATION = "Location"
    URL = "URL"
    TEXT = "Text"
    TEMPORAL = "Temporal"


@dataclass
class TypedTable:
    headers: list[str]
    types: list[ColumnType]
    rows: list[list[str]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.headers) != len(self.types):
            raise ValueError("headers and types length mismatch")
        for r in self.rows:
            if len(r) != len(self.headers):
                raise ValueError("ragged row in typed table")

    @property
    def width(self) -> int:
        return len(self.headers)

    def column_index(self, name: str) -> int:
        try:
            return self.headers.index(name)
        except ValueError:
            raise KeyError(name) from None

    def column_type(self, name: str) -> ColumnType:
        return self.types[self.column_index(name)]

    def column_values(self, name: str) -> list[str]:
        i = self.column_index(name)
        return [r[i] for r in self.rows]

    def schema(self) -> list[dict]:
        return [{"name": h, "type": t.value} for h, t in zip(self.headers, self.types)]


def _quote_cell(cell: str) -> str:
    # Minimal RFC-4180 quoting. Explicit rather than csv.writer because the
    # stdlib's QUOTE_MINIMAL leaves bare carriage returns unquoted when the
    # line terminator is "\n", which breaks the parse/serialize round trip.
    if any(c in cell for c in ',"\n\r'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def _serialize_row(cells: list[str]) -> str:
    # A lone empty cell must be quoted: an empty line would read back as an
    # empty record, not as a one-column row with a missing value.
    if len(cells) == 1 and cells[0] == "":
        return '""'
    return ",".join(_quote_cell(c) for c in cells)


def serialize_table(table: TypedTable) -> bytes:
    """Canonical CSV bytes of the table (data only; types live in the catalog)."""
    lines = [_serialize_row(table.headers)]
    lines.extend(_serialize_row(row) for row in table.rows)
    return ("\n".join(lines) + "\n").encode("utf-8")


def deserialize_table(data: bytes, types: list[ColumnType]) -> TypedTable:
    rows = list(csv.reader(io.StringIO(data.decode("utf-8"), newline="")))
    if not rows:
        raise ValueError("empty table payload")
    return TypedTable(headers=rows[0], types=list(types), rows=rows[1:])


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def parse_number(cell: str) -> float | None:
    """Decimal value of a cell, or None when it is missing/unparseable.

    Accepts optional thousands separators ("1,234.5"). Rejects non-finite
    spellings ("nan", "inf"): persisted chart payloads must stay finite.
    """
    s = cell.strip()
    if not s:
        return None
    if _THOUSANDS_RE.match(s):
        s = s.replace(",", "")
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


_THOUSANDS_RE = re.compile(r"^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$")

_ISO_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})([T ].*)?$")
_YEAR_RE = re.compile(r"^[12]\d{3}$")
_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12, "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7,
    "aug": 8, "sep": 9, "sept": 9, "oct": 10, "nov": 11, "dec": 12,
}
_MONTH_NAME_RE = re.compile(
    r"^([A-Za-z]+)[ ,.]*((?:[12]\d{3}))?$"
)


def temporal_key(cell: str) -> str | None:
    """Sortable ISO-normalized key for a temporal cell, or None.

    Bare years become "YYYY", ISO dates pass through, month-name forms
    normalize to "YYYY-MM" (or "0000-MM" without a year) so lexicographic
    order equals chronological order within one form.
    """
    s = cell.strip()
    if not s:
        return None
    if _YEAR_RE.match(s):
        return s
    m = _ISO_DATE_RE.match(s)
    if m:
        return s
    m = _MONTH_NAME_RE.match(s)
    if m and m.group(1).lower() in _MONTHS:
        month = _MONTHS[m.group(1).lower()]
        year = m.group(2) or "0000"
        return f"{year}-{month:02d}"
    return None


def is_temporal(cell: str) -> bool:
    return temporal_key(cell) is not None
