"""Version creation and automatic regeneration of derived items.

When an item gains a version, the forward closure (everything whose latest
generating activity used the item, transitively) is re-executed in
dependency order with every input at its newest version. A failing
re-execution marks the derived item's latest version stale with the failure
reason and skips that item's descendants; everything outside the closure is
untouched.

An item whose latest version was uploaded manually (a new-version activity)
is its own derivation root: automatic regeneration stops there, because the
recorded operation chain no longer describes its current content.
"""

from __future__ import annotations

import logging
from typing import Callable

from . import provenance
from .catalog import Catalog, VersionRecord
from .errors import DatalakeError, KindMismatch, Unauthorized, UnknownItem
from .table import TypedTable, serialize_table

logger = logging.getLogger(__name__)


def create_version(cat: Catalog, index_item: Callable[[str], None],
                   item_id: str, new_table: TypedTable, actor: str,
                   dry_run_propagation: bool = False) -> tuple[VersionRecord, list[dict]]:
    """Append version n+1 with a new-version activity, then propagate."""
    if item_id not in cat.items:
        raise UnknownItem(f"no item {item_id!r}")
    item = cat.items[item_id]
    if not cat.authorize(actor, "version", item.workspace):
        raise Unauthorized("versioning requires the version grant")
    if item.kind != "table":
        raise KindMismatch("charts are regenerated by propagation, never versioned directly")
    prev = item.latest.number
    record = cat.add_version(
        item_id, serialize_table(new_table), new_table.schema(), actor,
        activity={"kind": "new-version", "params": {"op": "new-version"},
                  "agent": actor, "used": [(item_id, prev)]},
    )
    index_item(item_id)
    report = propagate(cat, index_item, item_id, actor, dry_run=dry_run_propagation)
    return record, report


def forward_closure(cat: Catalog, item_id: str) -> list[str]:
    """Derived items to regenerate, in dependency order."""
    affected: list[str] = []
    frontier = [item_id]
    while frontier:
        nxt = []
        for src in frontier:
            for act_id in sorted(cat.consumers.get(src, ())):
                act = cat.activities[act_id]
                out_item = act.output[0]
                if out_item == src or out_item in affected or out_item == item_id:
                    continue
                # Only an item's *latest* activity defines its derivation.
                latest = cat.items[out_item].latest.number
                if cat.activity_by_output[(out_item, latest)] != act_id:
                    continue
                affected.append(out_item)
                nxt.append(out_item)
        frontier = nxt

    # Dependency order: an item runs only after its affected inputs.
    ordered: list[str] = []
    remaining = list(affected)
    while remaining:
        progressed = False
        for x in list(remaining):
            act = cat.activities[cat.activity_by_output[(x, cat.items[x].latest.number)]]
            deps = {i for i, _ in act.used}
            if deps & set(remaining):
                continue
            ordered.append(x)
            remaining.remove(x)
            progressed = True
        if not progressed:  # derivation graph is a DAG, so this cannot happen
            raise DatalakeError(f"cyclic derivation among {remaining}")
    return ordered


def propagate(cat: Catalog, index_item: Callable[[str], None],
              item_id: str, actor: str, dry_run: bool = False) -> list[dict]:
    """Re-execute the forward closure; failures become stale marks."""
    if item_id not in cat.items:
        raise UnknownItem(f"no item {item_id!r}")
    plan = forward_closure(cat, item_id)
    if dry_run:
        return [{"item": x, "status": "planned", "version": None, "reason": None} for x in plan]

    report: list[dict] = []
    blocked: set[str] = set()
    for x in plan:
        item = cat.items[x]
        act = cat.activities[cat.activity_by_output[(x, item.latest.number)]]
        if any(i in blocked for i, _ in act.used):
            report.append({"item": x, "status": "skipped", "version": None,
                           "reason": "upstream regeneration failed"})
            blocked.add(x)
            continue
        inputs = []
        try:
            for i, _ in act.used:
                ref = (i, cat.items[i].latest.number)
                inputs.append((ref, provenance.load_table_version(cat, *ref)))
            content, schema, _ = provenance.execute_descriptor(act.kind, act.params, inputs)
        except DatalakeError as e:
            reason = e.message or e.code
            cat.mark_stale(x, item.latest.number, reason)
            blocked.add(x)
            report.append({"item": x, "status": "stale", "version": item.latest.number,
                           "reason": reason})
            logger.warning("propagation left %s stale: %s", x, reason)
            continue
        record = cat.add_version(
            x, content, schema, actor,
            activity={"kind": act.kind, "params": act.params, "agent": actor,
                      "used": [ref for ref, _ in inputs]},
        )
        index_item(x)
        report.append({"item": x, "status": "regenerated", "version": record.number,
                       "reason": None})
    return report


def list_versions(cat: Catalog, item_id: str, viewer: str | None) -> list[dict]:
    """All version records, oldest first, with a diff summary per step."""
    item = cat.require_read(viewer, item_id)
    out = []
    prev_cols: set[str] | None = None
    prev_rows: int | None = None
    for v in item.versions:
        entry = v.as_dict()
        if item.kind == "table":
            table = cat.get_table(item_id, v.number)
            cols = set(table.headers)
            entry["row_count"] = len(table.rows)
            entry["diff"] = None if prev_cols is None else {
                "rows_delta": len(table.rows) - prev_rows,
                "columns_added": sorted(cols - prev_cols),
                "columns_removed": sorted(prev_cols - cols),
            }
            prev_cols, prev_rows = cols, len(table.rows)
        out.append(entry)
    return out
