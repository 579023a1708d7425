"""PROV-style provenance: lineage trees, export/import, and replay.

Every item version has exactly one generating activity (committed atomically
with the version). Two closure-rule details the rest of the system leans on:

- Tree/export expansion: transform activities (rename/filter/select/merge/
  chart/new-version) expand recursively; acquisition activities (ingest,
  import-external) expand only when their output is the root being asked
  about. Upstream tables therefore appear as plain leaf entities in the
  lineage of anything derived from them, matching the visual tree: a chart
  over two merges shows 6 entities and 3 activities.
- Replay recomputation: only rename/filter/select/merge/chart re-execute;
  ingest, import-external, and new-version resolve to their stored blobs
  (their bytes are the ground truth, not reproducible from parameters).

Replay materializes a new item for the root and for any intermediate whose
recomputed content differs from the original (i.e. downstream of a
substitution); unchanged intermediates are reused so an empty-substitution
replay reproduces the stored content hash bit-exactly, chart source
back-references included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import charts, relops
from .catalog import ACQUISITION_OPS, Activity, Catalog
from .errors import (
    MissingAncestor,
    SchemaIncompatibleSubstitution,
    UnknownItem,
)
from .table import ColumnType, TypedTable, deserialize_table, serialize_table

REPLAYABLE_OPS = ("rename", "filter", "select", "merge", "chart")
CONTENT_BOUNDARY_OPS = ACQUISITION_OPS + ("new-version",)


# ----------------------------------------------------------------------
# lineage tree
# ----------------------------------------------------------------------

def generating_activity(cat: Catalog, item_id: str, version: int) -> Activity:
    act_id = cat.activity_by_output.get((item_id, version))
    if act_id is None:
        raise MissingAncestor(f"({item_id}, {version}) has no generating activity")
    return cat.activities[act_id]


def lineage_tree(cat: Catalog, item_id: str, version: int | None,
                 viewer: str | None) -> dict:
    """Full ancestor tree; unreadable entities become opaque stubs.

    A stub keeps its children (each child is access-checked on its own) but
    exposes nothing beyond the opaque entity id.
    """
    item = cat.require_read(viewer, item_id)
    v = item.latest.number if version is None else version

    def node(iid: str, ver: int, is_root: bool) -> dict:
        it = cat.items[iid]
        vr = it.version(ver)
        act = generating_activity(cat, iid, ver)
        readable = cat.can_read_item(viewer, iid)
        children = []
        if act.kind not in ACQUISITION_OPS or is_root:
            for u_item, u_ver in act.used:
                children.append(node(u_item, u_ver, False))
            for src_id in act.sources:
                src = cat.source_entities[src_id]
                children.append({
                    "entity": src.id,
                    "kind": "external-source",
                    "attributes": {"url": src.url, "note": src.note},
                    "children": [],
                })
        if not readable:
            return {"entity": vr.entity, "redacted": True, "children": children}
        return {
            "entity": vr.entity,
            "item": iid,
            "version": ver,
            "kind": it.kind,
            "attributes": {"name": it.name, "type": it.kind, "operation": act.kind},
            "children": children,
        }

    return node(item.id, v, True)


def tree_entity_count(tree: dict) -> int:
    return 1 + sum(tree_entity_count(c) for c in tree.get("children", []))


# ----------------------------------------------------------------------
# PROV-JSON export / import
# ----------------------------------------------------------------------

@dataclass
class ProvDocument:
    """Parsed PROV-JSON-shaped document; relations are edge dicts."""

    entities: dict[str, dict] = field(default_factory=dict)
    activities: dict[str, dict] = field(default_factory=dict)
    agents: dict[str, dict] = field(default_factory=dict)
    used: list[dict] = field(default_factory=list)
    was_generated_by: list[dict] = field(default_factory=list)
    was_associated_with: list[dict] = field(default_factory=list)
    was_derived_from: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        def canon(rel: list[dict]) -> list[dict]:
            return sorted(rel, key=lambda e: json.dumps(e, sort_keys=True))
        return {
            "entity": self.entities,
            "activity": self.activities,
            "agent": self.agents,
            "used": canon(self.used),
            "wasGeneratedBy": canon(self.was_generated_by),
            "wasAssociatedWith": canon(self.was_associated_with),
            "wasDerivedFrom": canon(self.was_derived_from),
        }

    def to_bytes(self) -> bytes:
        return (json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False,
                           indent=2) + "\n").encode("utf-8")


def import_prov(data: bytes | dict) -> ProvDocument:
    doc = json.loads(data) if isinstance(data, (bytes, str)) else data
    return ProvDocument(
        entities=doc.get("entity", {}),
        activities=doc.get("activity", {}),
        agents=doc.get("agent", {}),
        used=doc.get("used", []),
        was_generated_by=doc.get("wasGeneratedBy", []),
        was_associated_with=doc.get("wasAssociatedWith", []),
        was_derived_from=doc.get("wasDerivedFrom", []),
    )


def export_prov(cat: Catalog, item_id: str, version: int | None,
                viewer: str | None) -> ProvDocument:
    """PROV document of the item's ancestor closure (same bounds as the tree)."""
    item = cat.require_read(viewer, item_id)
    v = item.latest.number if version is None else version
    doc = ProvDocument()
    seen: set[tuple[str, int]] = set()

    def entity_attrs(iid: str, ver: int, operation: str) -> dict:
        it = cat.items[iid]
        if not cat.can_read_item(viewer, iid):
            return {"dl:redacted": True}
        return {
            "dl:name": it.name,
            "dl:type": it.kind,
            "dl:operation": operation,
            "dl:item": iid,
            "dl:version": ver,
        }

    def walk(iid: str, ver: int, is_root: bool):
        if (iid, ver) in seen:
            return
        seen.add((iid, ver))
        act = generating_activity(cat, iid, ver)
        vr = cat.items[iid].version(ver)
        doc.entities[vr.entity] = entity_attrs(iid, ver, act.kind)
        if act.kind in ACQUISITION_OPS and not is_root:
            return
        # Parameters may reference input item ids (merge plans); hide them
        # from viewers who cannot read every input.
        params: dict = act.params
        if any(not cat.can_read_item(viewer, u_item) for u_item, _ in act.used):
            params = {"dl:redacted": True}
        doc.activities[act.id] = {
            "dl:operation": act.kind,
            "dl:parameters": params,
            "prov:endTime": act.timestamp,
        }
        doc.agents.setdefault(act.agent, {"prov:type": "prov:Person"})
        doc.was_generated_by.append({"entity": vr.entity, "activity": act.id})
        doc.was_associated_with.append({"activity": act.id, "agent": act.agent})
        for u_item, u_ver in act.used:
            walk(u_item, u_ver, False)
            u_entity = cat.items[u_item].version(u_ver).entity
            doc.used.append({"activity": act.id, "entity": u_entity})
            doc.was_derived_from.append({"generatedEntity": vr.entity, "usedEntity": u_entity})
        for src_id in act.sources:
            src = cat.source_entities[src_id]
            doc.entities[src.id] = {
                "dl:type": "external-source",
                "prov:atLocation": src.url,
                "dl:note": src.note,
                "dl:retrievedAt": src.retrieved_at,
            }
            doc.used.append({"activity": act.id, "entity": src.id})
            doc.was_derived_from.append({"generatedEntity": vr.entity, "usedEntity": src.id})

    walk(item.id, v, True)
    return doc


# ----------------------------------------------------------------------
# deterministic re-execution
# ----------------------------------------------------------------------

def execute_descriptor(kind: str, params: dict,
                       inputs: list[tuple[tuple[str, int], TypedTable]]):
    """Re-run one recorded operation on the given input tables.

    ``inputs`` pairs each table with its effective (item, version) reference;
    chart documents embed that reference. Returns (content bytes, schema or
    None, item kind).
    """
    tables = [t for _, t in inputs]
    if kind == "rename":
        out = relops.rename_columns(tables[0], dict(params["mapping"]))
    elif kind == "filter":
        out = relops.filter_rows(tables[0], relops.Predicate.from_wire(params["predicate"]))
    elif kind == "select":
        out = relops.select_columns(tables[0], list(params["columns"]))
    elif kind == "merge":
        keys = [[(p["left"], p["right"]) for p in pair] for pair in params["keys"]]
        out = relops.merge_tables(tables, keys, params.get("output_columns"))
    elif kind == "chart":
        spec = charts.ChartSpec.from_wire(params["spec"])
        doc = charts.compute_chart_data(tables[0], spec, source=inputs[0][0])
        return charts.canonical_doc_bytes(doc), None, "chart"
    else:
        raise MissingAncestor(f"operation kind {kind!r} is not replayable")
    return serialize_table(out), out.schema(), "table"


def referenced_columns(kind: str, params: dict, position: int) -> set[str]:
    """Columns a recorded descriptor requires of its input at ``position``."""
    if kind == "rename":
        return set(params["mapping"].keys())
    if kind == "filter":
        return {a["column"] for a in params["predicate"]}
    if kind == "select":
        return set(params["columns"])
    if kind == "merge":
        if position == 0:
            return {p["left"] for p in params["keys"][0]} if params["keys"] else set()
        pairs = params["keys"][position - 1] if position - 1 < len(params["keys"]) else []
        return {p["right"] for p in pairs}
    if kind == "chart":
        spec = params["spec"]
        return {spec[b] for b in ("x", "y", "z", "color", "region") if spec.get(b)}
    return set()


# ----------------------------------------------------------------------
# replay planning
# ----------------------------------------------------------------------

@dataclass
class ReplayStep:
    item: str
    version: int
    activity: Activity | None      # None at content boundaries
    inputs: list[tuple[str, int]]  # (item, version) in recorded order


def plan_replay(cat: Catalog, item_id: str, version: int,
                substitutions: dict[str, str]) -> list[ReplayStep]:
    """Topologically ordered ancestor steps (inputs before consumers)."""
    for old, new in substitutions.items():
        if old not in cat.items:
            raise UnknownItem(f"substituted item {old!r} does not exist")
        if new not in cat.items:
            raise UnknownItem(f"replacement item {new!r} does not exist")
        if cat.items[new].kind != cat.items[old].kind:
            raise SchemaIncompatibleSubstitution(
                f"replacement {new!r} is a {cat.items[new].kind}, "
                f"expected a {cat.items[old].kind}")
    steps: list[ReplayStep] = []
    seen: set[tuple[str, int]] = set()

    def visit(iid: str, ver: int, is_root: bool):
        if (iid, ver) in seen:
            return
        seen.add((iid, ver))
        act = generating_activity(cat, iid, ver)
        if not is_root and (iid in substitutions or act.kind in CONTENT_BOUNDARY_OPS):
            steps.append(ReplayStep(iid, ver, None, []))
            return
        if act.kind in CONTENT_BOUNDARY_OPS:  # root over a boundary op: plain copy
            steps.append(ReplayStep(iid, ver, None, []))
            return
        for u_item, u_ver in act.used:
            visit(u_item, u_ver, False)
        steps.append(ReplayStep(iid, ver, act, list(act.used)))

    visit(item_id, version, True)
    _check_substitution_schemas(cat, steps, substitutions)
    return steps


def _check_substitution_schemas(cat: Catalog, steps: list[ReplayStep],
                                substitutions: dict[str, str]):
    if not substitutions:
        return
    for step in steps:
        if step.activity is None:
            continue
        for pos, (u_item, _) in enumerate(step.inputs):
            if u_item not in substitutions:
                continue
            replacement = cat.items[substitutions[u_item]]
            schema = replacement.latest.schema or []
            have = {c["name"] for c in schema}
            need = referenced_columns(step.activity.kind, step.activity.params, pos)
            missing = sorted(need - have)
            if missing:
                raise SchemaIncompatibleSubstitution(
                    f"replacement {replacement.id!r} lacks column(s) {', '.join(missing)}")


def load_table_version(cat: Catalog, item_id: str, version: int) -> TypedTable:
    vr = cat.items[item_id].version(version)
    types = [ColumnType(c["type"]) for c in vr.schema or []]
    try:
        blob = cat.blobs.get(vr.hash)
    except KeyError:
        raise MissingAncestor(f"blob {vr.hash} for ({item_id}, {version}) is missing") from None
    return deserialize_table(blob, types)
