"""Dataset-type-specific analysis ops: rename, filter, select, and merge.

All functions here are pure TypedTable -> TypedTable transforms; the service
layer registers results as data items and records provenance. Semantics that
matter for replay and for the oracles:

- Ordering comparators parse cells as decimal numbers (Numerical) or compare
  ISO-normalized forms (Temporal); cells that fail to parse never satisfy an
  ordering atom. Equality falls back to exact string comparison when either
  side does not parse.
- Merge is an inner equi-join, associating left to right. Output row order
  is left-table order, then right-match order. A column name present on both
  sides is kept twice, suffixed _x (left) and _y (right). Empty key cells
  never match (empty string is the missing marker).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    EmptyInputs,
    EmptySelection,
    IncompatibleKeyTypes,
    NameCollision,
    TypeMismatch,
    UnknownColumn,
)
from .table import ColumnType, TypedTable, parse_number, temporal_key

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "contains")
_ORDERING = {"<", "<=", ">", ">="}
_CONTAINS_TYPES = {ColumnType.TEXT, ColumnType.CATEGORICAL, ColumnType.URL}


@dataclass(frozen=True)
class Atom:
    column: str
    op: str
    value: str


@dataclass(frozen=True)
class Predicate:
    """Conjunction of atoms; the empty conjunction is true."""

    atoms: tuple[Atom, ...] = ()

    @classmethod
    def from_wire(cls, atoms: list[dict]) -> "Predicate":
        return cls(tuple(Atom(a["column"], a["op"], str(a["value"])) for a in atoms))

    def to_wire(self) -> list[dict]:
        return [{"column": a.column, "op": a.op, "value": a.value} for a in self.atoms]


@dataclass
class MergePlan:
    """Ordered inputs plus per-adjacent-pair equi-join keys (inner join only)."""

    inputs: list[str]                       # >= 2 item ids, joined left to right
    keys: list[list[tuple[str, str]]]       # one key list per adjacent pair
    output_columns: list[str] | None = None  # None keeps every column

    @classmethod
    def from_wire(cls, doc: dict) -> "MergePlan":
        keys = [[(p["left"], p["right"]) for p in pair] for pair in doc.get("keys", [])]
        return cls(inputs=list(doc["inputs"]), keys=keys,
                   output_columns=list(doc["output_columns"]) if doc.get("output_columns") else None)

    def to_wire(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "keys": [[{"left": l, "right": r} for l, r in pair] for pair in self.keys],
            "output_columns": list(self.output_columns) if self.output_columns else None,
        }


def rename_columns(table: TypedTable, mapping: dict[str, str]) -> TypedTable:
    for old in mapping:
        if old not in table.headers:
            raise UnknownColumn(f"no column {old!r}")
    new_headers = [mapping.get(h, h) for h in table.headers]
    if len(set(new_headers)) != len(new_headers):
        dupes = sorted({h for h in new_headers if new_headers.count(h) > 1})
        raise NameCollision(f"rename collides on {dupes}")
    return TypedTable(headers=new_headers, types=list(table.types), rows=[list(r) for r in table.rows])


def _check_atom(table: TypedTable, atom: Atom) -> int:
    if atom.op not in COMPARATORS:
        raise TypeMismatch(f"unknown comparator {atom.op!r}")
    if atom.column not in table.headers:
        raise UnknownColumn(f"no column {atom.column!r}")
    idx = table.column_index(atom.column)
    ctype = table.types[idx]
    if atom.op in _ORDERING and ctype not in (ColumnType.NUMERICAL, ColumnType.TEMPORAL):
        raise TypeMismatch(f"{atom.op} requires a Numerical or Temporal column, {atom.column!r} is {ctype.value}")
    if atom.op == "contains" and ctype not in _CONTAINS_TYPES:
        raise TypeMismatch(f"contains requires Text/Categorical/URL, {atom.column!r} is {ctype.value}")
    return idx


def eval_atom(cell: str, op: str, value: str, ctype: ColumnType) -> bool:
    if op == "contains":
        return value in cell
    if ctype == ColumnType.NUMERICAL:
        a, b = parse_number(cell), parse_number(value)
        if a is not None and b is not None:
            return _compare(a, b, op)
        if op in _ORDERING:
            return False  # unparseable cells never satisfy ordering atoms
    elif ctype == ColumnType.TEMPORAL:
        a, b = temporal_key(cell), temporal_key(value)
        if a is not None and b is not None:
            # Lexicographic on the ISO-normalized key; 4-digit bare years
            # order the same way numerically.
            return _compare(a, b, op)
        if op in _ORDERING:
            return False
    if op == "=":
        return cell == value
    if op == "!=":
        return cell != value
    return False


def _compare(a, b, op: str) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def filter_rows(table: TypedTable, predicate: Predicate) -> TypedTable:
    checked = [(_check_atom(table, a), a) for a in predicate.atoms]
    rows = [
        list(r) for r in table.rows
        if all(eval_atom(r[idx], a.op, a.value, table.types[idx]) for idx, a in checked)
    ]
    return TypedTable(headers=list(table.headers), types=list(table.types), rows=rows)


def select_columns(table: TypedTable, columns: list[str]) -> TypedTable:
    if not columns:
        raise EmptySelection("select requires at least one column")
    idxs = []
    for c in columns:
        if c not in table.headers:
            raise UnknownColumn(f"no column {c!r}")
        idxs.append(table.column_index(c))
    return TypedTable(
        headers=[table.headers[i] for i in idxs],
        types=[table.types[i] for i in idxs],
        rows=[[r[i] for i in idxs] for r in table.rows],
    )


def infer_join_keys(left: TypedTable, right: TypedTable,
                    sample_cap: int = 1000) -> list[tuple[str, str, float]]:
    """Ranked candidate key pairs for an equi-join.

    Score 1.0 for normalized-name equality with identical column type;
    otherwise the Jaccard overlap of distinct value samples (same type only,
    qualifying at >= 0.5). Descending score, then name-alphabetical.
    """
    def norm(name: str) -> str:
        return name.casefold().replace(" ", "").replace("_", "")

    def distincts(t: TypedTable, col: str) -> set[str]:
        out: set[str] = set()
        i = t.column_index(col)
        for r in t.rows:
            if r[i]:
                out.add(r[i])
                if len(out) >= sample_cap:
                    break
        return out

    candidates = []
    for lc, lt in zip(left.headers, left.types):
        for rc, rt in zip(right.headers, right.types):
            if lt != rt:
                continue
            if norm(lc) == norm(rc):
                candidates.append((lc, rc, 1.0))
                continue
            ls, rs = distincts(left, lc), distincts(right, rc)
            union = ls | rs
            if not union:
                continue
            score = len(ls & rs) / len(union)
            if score >= 0.5:
                candidates.append((lc, rc, score))
    candidates.sort(key=lambda t: (-t[2], t[0], t[1]))
    return candidates


def join_pair(left: TypedTable, right: TypedTable,
              keys: list[tuple[str, str]]) -> TypedTable:
    """Inner equi-join of two tables on the given key column pairs."""
    if not keys:
        raise EmptyInputs("join requires at least one key pair")
    lidx, ridx = [], []
    for lk, rk in keys:
        if lk not in left.headers:
            raise UnknownColumn(f"no column {lk!r} in left table")
        if rk not in right.headers:
            raise UnknownColumn(f"no column {rk!r} in right table")
        if left.column_type(lk) != right.column_type(rk):
            raise IncompatibleKeyTypes(
                f"key {lk!r} is {left.column_type(lk).value} but {rk!r} is {right.column_type(rk).value}")
        lidx.append(left.column_index(lk))
        ridx.append(right.column_index(rk))

    shared = set(left.headers) & set(right.headers)
    out_headers = [h + "_x" if h in shared else h for h in left.headers] + \
                  [h + "_y" if h in shared else h for h in right.headers]
    if len(set(out_headers)) != len(out_headers):
        dupes = sorted({h for h in out_headers if out_headers.count(h) > 1})
        raise NameCollision(f"suffixing cannot disambiguate {dupes}")
    out_types = list(left.types) + list(right.types)

    by_key: dict[tuple[str, ...], list[int]] = {}
    for j, rrow in enumerate(right.rows):
        key = tuple(rrow[i] for i in ridx)
        if any(not k for k in key):
            continue  # missing key cells never match
        by_key.setdefault(key, []).append(j)

    rows = []
    for lrow in left.rows:
        key = tuple(lrow[i] for i in lidx)
        if any(not k for k in key):
            continue
        for j in by_key.get(key, ()):
            rows.append(list(lrow) + list(right.rows[j]))
    return TypedTable(headers=out_headers, types=out_types, rows=rows)


def merge_tables(tables: list[TypedTable], keys: list[list[tuple[str, str]]],
                 output_columns: list[str] | None = None) -> TypedTable:
    """Left-to-right sequence of inner equi-joins, then column selection."""
    if len(tables) < 2:
        raise EmptyInputs("merge needs at least two tables")
    if len(keys) != len(tables) - 1:
        raise EmptyInputs(f"merge of {len(tables)} tables needs {len(tables) - 1} key lists")
    acc = tables[0]
    for t, pair_keys in zip(tables[1:], keys):
        acc = join_pair(acc, t, pair_keys)
    if output_columns is not None:
        acc = select_columns(acc, output_columns)
    return acc
