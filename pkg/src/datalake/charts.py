"""Declarative chart specs and server-side chart-data computation.

Charts persist data documents, never pixels; rendering is the UI's job.
Every compute op here is a pure, deterministic function of (table, spec) so
chart items replay bit-exactly. Documents are serialized canonically
(sorted keys, compact separators, UTF-8) before content addressing.

Heatmap linear interpolation: empty cells are first filled along each grid
row by linear interpolation between the nearest non-empty cells on both
sides; cells still empty are then filled the same way along columns, where
row-pass results count as anchors. Interpolation never touches non-empty
cells and never extrapolates past the data bounding box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InvalidSpec, TypeMismatch, UnknownColumn
from .gazetteer import region_code
from .table import ColumnType, TypedTable, parse_number, temporal_key

CHART_KINDS = ("bar", "line", "scatter2d", "scatter3d", "heatmap2d", "choropleth")
AGGREGATES = ("mean", "sum", "count")
INTERPOLATIONS = ("none", "linear")
DEFAULT_BINS = (50, 50)


@dataclass(frozen=True)
class ChartSpec:
    kind: str
    title: str = ""
    x: str | None = None
    y: str | None = None
    z: str | None = None
    color: str | None = None
    region: str | None = None
    aggregate: str = "mean"
    bins: tuple[int, int] = DEFAULT_BINS
    interpolation: str = "linear"

    @classmethod
    def from_wire(cls, doc: dict) -> "ChartSpec":
        if doc.get("kind") not in CHART_KINDS:
            raise InvalidSpec(f"unknown chart kind {doc.get('kind')!r}")
        bins = doc.get("bins") or DEFAULT_BINS
        return cls(
            kind=doc["kind"], title=doc.get("title", ""),
            x=doc.get("x"), y=doc.get("y"), z=doc.get("z"),
            color=doc.get("color"), region=doc.get("region"),
            aggregate=doc.get("aggregate", "mean"),
            bins=(int(bins[0]), int(bins[1])),
            interpolation=doc.get("interpolation", "linear"),
        )

    def to_wire(self) -> dict:
        return {
            "kind": self.kind, "title": self.title, "x": self.x, "y": self.y,
            "z": self.z, "color": self.color, "region": self.region,
            "aggregate": self.aggregate, "bins": list(self.bins),
            "interpolation": self.interpolation,
        }


def canonical_doc_bytes(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")).encode("utf-8")


def _require(table: TypedTable, column: str | None, binding: str,
             allowed: tuple[ColumnType, ...] | None) -> str:
    if not column:
        raise InvalidSpec(f"chart binding {binding!r} is required")
    if column not in table.headers:
        raise InvalidSpec(f"chart binding {binding!r} references absent column {column!r}")
    if allowed is not None and table.column_type(column) not in allowed:
        raise InvalidSpec(
            f"column {column!r} is {table.column_type(column).value}; "
            f"{binding} needs one of {[t.value for t in allowed]}")
    return column


NUM = (ColumnType.NUMERICAL,)
LINE_X = (ColumnType.TEMPORAL, ColumnType.NUMERICAL)


def validate_spec(spec: ChartSpec, table: TypedTable):
    """Check bindings against the table schema; raises invalid-spec."""
    if spec.kind not in CHART_KINDS:
        raise InvalidSpec(f"unknown chart kind {spec.kind!r}")
    if spec.aggregate not in AGGREGATES:
        raise InvalidSpec(f"unknown aggregate {spec.aggregate!r}")
    if spec.interpolation not in INTERPOLATIONS:
        raise InvalidSpec(f"unknown interpolation {spec.interpolation!r}")
    if spec.kind == "bar":
        _require(table, spec.x, "x", None)
        _require(table, spec.y, "y", NUM)
    elif spec.kind == "line":
        _require(table, spec.x, "x", LINE_X)
        _require(table, spec.y, "y", NUM)
    elif spec.kind == "scatter2d":
        _require(table, spec.x, "x", NUM)
        _require(table, spec.y, "y", NUM)
    elif spec.kind == "scatter3d":
        _require(table, spec.x, "x", NUM)
        _require(table, spec.y, "y", NUM)
        _require(table, spec.z, "z", NUM)
    elif spec.kind == "heatmap2d":
        _require(table, spec.x, "x", NUM)
        _require(table, spec.y, "y", NUM)
        _require(table, spec.color, "color", NUM)
        if spec.bins[0] < 2 or spec.bins[1] < 2:
            raise InvalidSpec("heatmap bins must be at least 2x2")
    elif spec.kind == "choropleth":
        _require(table, spec.region, "region", (ColumnType.LOCATION,))
        _require(table, spec.color, "color (region value)", NUM)


# ----------------------------------------------------------------------
# compute ops
# ----------------------------------------------------------------------

def _aggregate(values: list[float], how: str) -> float | None:
    if how == "count":
        return float(len(values))
    if not values:
        return None
    if how == "sum":
        return sum(values)
    return sum(values) / len(values)


def compute_group_series(table: TypedTable, x: str, y: str, aggregate: str = "mean") -> dict:
    """Group rows by exact x value and reduce parseable y cells per group."""
    if x not in table.headers:
        raise UnknownColumn(f"no column {x!r}")
    if y not in table.headers:
        raise UnknownColumn(f"no column {y!r}")
    if table.column_type(y) != ColumnType.NUMERICAL:
        raise TypeMismatch(f"y column {y!r} must be Numerical")
    if aggregate not in AGGREGATES:
        raise TypeMismatch(f"unknown aggregate {aggregate!r}")
    xi, yi = table.column_index(x), table.column_index(y)
    groups: dict[str, list[float]] = {}
    for r in table.rows:
        v = parse_number(r[yi])
        groups.setdefault(r[xi], [])
        if v is not None:
            groups[r[xi]].append(v)

    xtype = table.column_type(x)

    def sort_key(label: str):
        if xtype == ColumnType.NUMERICAL:
            n = parse_number(label)
            return (0, n, "") if n is not None else (1, 0.0, label)
        if xtype == ColumnType.TEMPORAL:
            k = temporal_key(label)
            return (0, 0.0, k) if k is not None else (1, 0.0, label)
        return (0, 0.0, label)

    series = [
        {"x": label, "y": _aggregate(vals, aggregate)}
        for label, vals in sorted(groups.items(), key=lambda kv: sort_key(kv[0]))
    ]
    return {"series": series}


def compute_scatter(table: TypedTable, x: str, y: str, z: str | None = None) -> dict:
    """One point per fully-parseable row; unparseable rows are counted, not kept."""
    cols = [x, y] + ([z] if z else [])
    for c in cols:
        if c not in table.headers:
            raise UnknownColumn(f"no column {c!r}")
        if table.column_type(c) != ColumnType.NUMERICAL:
            raise TypeMismatch(f"scatter column {c!r} must be Numerical")
    idxs = [table.column_index(c) for c in cols]
    points, dropped = [], 0
    for r in table.rows:
        vals = [parse_number(r[i]) for i in idxs]
        if any(v is None for v in vals):
            dropped += 1
        else:
            points.append(vals)
    axes = {}
    for pos, axis in enumerate(("x", "y", "z")[:len(cols)]):
        coords = [p[pos] for p in points]
        axes[axis] = [min(coords), max(coords)] if coords else None
    return {"points": points, "dropped": dropped, "axes": axes}


def compute_heatmap_grid(table: TypedTable, x: str, y: str, color: str,
                         bins: tuple[int, int] = DEFAULT_BINS,
                         aggregate: str = "mean",
                         interpolation: str = "linear") -> dict:
    """Aggregate the color column over an nx-by-ny grid of the x/y plane.

    Equal cells over [min x, max x] x [min y, max y], max edge inclusive.
    A degenerate axis (all values equal) collapses to a single row/column
    and disables interpolation.
    """
    for c in (x, y, color):
        if c not in table.headers:
            raise UnknownColumn(f"no column {c!r}")
        if table.column_type(c) != ColumnType.NUMERICAL:
            raise TypeMismatch(f"heatmap column {c!r} must be Numerical")
    nx, ny = bins
    if nx < 2 or ny < 2:
        raise TypeMismatch("heatmap bins must be at least 2x2")
    if aggregate not in AGGREGATES:
        raise TypeMismatch(f"unknown aggregate {aggregate!r}")
    xi, yi, ci = (table.column_index(c) for c in (x, y, color))
    points = []
    for r in table.rows:
        px, py, pc = parse_number(r[xi]), parse_number(r[yi]), parse_number(r[ci])
        if px is not None and py is not None and pc is not None:
            points.append((px, py, pc))

    if not points:
        return {"values": [], "counts": [], "nx": 0, "ny": 0,
                "x_range": None, "y_range": None, "color_domain": None}

    min_x, max_x = min(p[0] for p in points), max(p[0] for p in points)
    min_y, max_y = min(p[1] for p in points), max(p[1] for p in points)
    degenerate = False
    if max_x == min_x:
        nx, degenerate = 1, True
    if max_y == min_y:
        ny, degenerate = 1, True

    def cell_of(v: float, lo: float, hi: float, n: int) -> int:
        if n == 1 or hi == lo:
            return 0
        i = int((v - lo) / (hi - lo) * n)
        return n - 1 if i >= n else i  # max edge inclusive

    sums = [[0.0] * nx for _ in range(ny)]
    counts = [[0] * nx for _ in range(ny)]
    for px, py, pc in points:
        gx, gy = cell_of(px, min_x, max_x, nx), cell_of(py, min_y, max_y, ny)
        sums[gy][gx] += pc
        counts[gy][gx] += 1

    values: list[list[float | None]] = [[None] * nx for _ in range(ny)]
    for gy in range(ny):
        for gx in range(nx):
            if counts[gy][gx]:
                if aggregate == "count":
                    values[gy][gx] = float(counts[gy][gx])
                elif aggregate == "sum":
                    values[gy][gx] = sums[gy][gx]
                else:
                    values[gy][gx] = sums[gy][gx] / counts[gy][gx]

    if interpolation == "linear" and not degenerate:
        _interpolate_rows(values)
        _interpolate_columns(values)

    filled = [v for row in values for v in row if v is not None]
    return {
        "values": values,
        "counts": counts,
        "nx": nx, "ny": ny,
        "x_range": [min_x, max_x],
        "y_range": [min_y, max_y],
        "color_domain": [min(filled), max(filled)] if filled else None,
    }


def _interpolate_line(line: list[float | None]) -> list[float | None]:
    anchors = [i for i, v in enumerate(line) if v is not None]
    if len(anchors) < 2:
        return line
    out = list(line)
    for a, b in zip(anchors, anchors[1:]):
        for i in range(a + 1, b):
            t = (i - a) / (b - a)
            out[i] = line[a] + (line[b] - line[a]) * t
    return out


def _interpolate_rows(values: list[list[float | None]]):
    for gy in range(len(values)):
        values[gy][:] = _interpolate_line(values[gy])


def _interpolate_columns(values: list[list[float | None]]):
    if not values:
        return
    for gx in range(len(values[0])):
        col = _interpolate_line([row[gx] for row in values])
        for gy, v in enumerate(col):
            values[gy][gx] = v


def compute_choropleth(table: TypedTable, region: str, value: str,
                       aggregate: str = "mean") -> dict:
    """Aggregate per normalized region code; unmatched names are reported."""
    if region not in table.headers:
        raise UnknownColumn(f"no column {region!r}")
    if value not in table.headers:
        raise UnknownColumn(f"no column {value!r}")
    if table.column_type(region) != ColumnType.LOCATION:
        raise TypeMismatch(f"region column {region!r} must be Location")
    if table.column_type(value) != ColumnType.NUMERICAL:
        raise TypeMismatch(f"value column {value!r} must be Numerical")
    ri, vi = table.column_index(region), table.column_index(value)
    groups: dict[str, list[float]] = {}
    unmatched: list[str] = []
    for r in table.rows:
        name = r[ri]
        if not name.strip():
            continue
        code = region_code(name)
        if code is None:
            if name not in unmatched:
                unmatched.append(name)
            continue
        v = parse_number(r[vi])
        groups.setdefault(code, [])
        if v is not None:
            groups[code].append(v)
    regions = {
        code: _aggregate(vals, aggregate)
        for code, vals in sorted(groups.items())
    }
    return {"regions": regions, "unmatched": sorted(unmatched)}


def compute_chart_data(table: TypedTable, spec: ChartSpec,
                       source: tuple[str, int]) -> dict:
    """Dispatch to the kind's compute op and wrap the canonical document."""
    validate_spec(spec, table)
    if spec.kind in ("bar", "line"):
        payload = compute_group_series(table, spec.x, spec.y, spec.aggregate)
    elif spec.kind == "scatter2d":
        payload = compute_scatter(table, spec.x, spec.y)
    elif spec.kind == "scatter3d":
        payload = compute_scatter(table, spec.x, spec.y, spec.z)
    elif spec.kind == "heatmap2d":
        payload = compute_heatmap_grid(table, spec.x, spec.y, spec.color,
                                       spec.bins, spec.aggregate, spec.interpolation)
    else:
        payload = compute_choropleth(table, spec.region, spec.color, spec.aggregate)
    return {
        "kind": spec.kind,
        "spec": spec.to_wire(),
        "source": {"item": source[0], "version": source[1]},
        "data": payload,
    }
