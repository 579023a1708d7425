"""The Datalake facade: every lifecycle operation, wired end to end.

This is the orchestration layer the HTTP API and CLI sit on: it authorizes
through the catalog matrix, runs the pure compute modules, registers results
(content + version + generating activity committed atomically), and keeps
the search index in step. Nothing below this layer checks permissions twice;
nothing above it touches the journal.

Derived outputs land in the target workspace (defaulting to the source
item's workspace); using a public item from someone else's workspace as an
input is allowed, the grant check applies to where the output lands.
"""

from __future__ import annotations

import json
import logging
import secrets

from . import charts, datalib, ingest, provenance, relops, versioning
from .catalog import Catalog, DataItem, utcnow_iso
from .errors import (
    DatalakeError,
    EmptyInputs,
    PayloadTooLarge,
    SchemaIncompatibleSubstitution,
    SchemaNotApproved,
    TypeMismatch,
    Unauthorized,
    UnknownItem,
)
from .ingest import RawTable, SchemaProposal
from .search import SearchIndex, document_fields
from .table import ColumnType, TypedTable, content_hash, deserialize_table, serialize_table


def _coerce_types(corrections: dict[str, str]) -> dict[str, ColumnType]:
    out = {}
    for col, t in corrections.items():
        try:
            out[col] = ColumnType(t)
        except ValueError:
            raise TypeMismatch(f"unknown column type {t!r}") from None
    return out

logger = logging.getLogger(__name__)

MAX_UPLOAD_BYTES = 100 * 1024 * 1024


class Datalake:
    def __init__(self, root, fsync: bool = True,
                 worldbank_base: str = datalib.WORLDBANK_BASE,
                 external_inferrer: ingest.ExternalInferrer | None = None):
        self.catalog = Catalog(root, fsync=fsync)
        self.index = SearchIndex(root)
        self.sources = datalib.default_registry(worldbank_base)
        self.external_inferrer = external_inferrer
        self._staged: dict[str, dict] = {}
        for item_id in self.catalog.items:
            if item_id not in self.index.docs:
                self.index_item(item_id)

    def close(self):
        self.catalog.close()

    # ------------------------------------------------------------------
    # users / workspaces / members (thin catalog passthrough)
    # ------------------------------------------------------------------

    def create_user(self, user_id: str, service_admin: bool, actor: str | None):
        # Bootstrap: the very first user may be minted without an actor.
        if self.catalog.users and not self.catalog.is_service_admin(actor):
            raise Unauthorized("user creation requires a service admin")
        return self.catalog.add_user(user_id, service_admin=service_admin)

    def create_workspace(self, name: str, parent: str | None, creator: str):
        return self.catalog.create_workspace(name, parent, creator)

    def add_member(self, workspace: str, user: str, role: str, grants, actor: str):
        return self.catalog.add_member(workspace, user, role, grants, actor)

    def set_visibility(self, item_id: str, visibility: str, actor: str) -> DataItem:
        item = self.catalog.set_visibility(item_id, visibility, actor)
        self.index_item(item_id)  # visibility gates at query time; refresh is cheap
        return item

    def resolve_permalink(self, token: str, requester: str | None) -> DataItem:
        return self.catalog.resolve_permalink(token, requester)

    def list_workspaces(self, requester: str | None) -> list[dict]:
        out = []
        for w in self.catalog.workspaces.values():
            if self.catalog.is_service_admin(requester) or \
                    self.catalog.membership(requester, w.id) is not None:
                out.append({"id": w.id, "name": w.name, "parent": w.parent,
                            "path": self.catalog.workspace_path(w.id)})
        return sorted(out, key=lambda w: w["path"])

    # ------------------------------------------------------------------
    # indexing
    # ------------------------------------------------------------------

    def index_item(self, item_id: str):
        if item_id not in self.catalog.items:
            raise UnknownItem(f"no item {item_id!r}")
        item = self.catalog.items[item_id]
        latest = item.latest
        ws_path = self.catalog.workspace_path(item.workspace)
        cells = labels = None
        if item.kind == "table":
            table = self.catalog.get_table(item_id)
            cells = list(table.headers)
            for row in table.rows:
                cells.extend(row)
        else:
            doc = json.loads(self.catalog.get_content(item_id))
            spec = doc.get("spec", {})
            labels = [spec.get("title", "")] + [
                str(spec.get(b)) for b in ("x", "y", "z", "color", "region") if spec.get(b)
            ]
        self.index.index_document(item_id, document_fields(
            item.name, item.description, latest.created_by, latest.created_at,
            ws_path, table_cells=cells, chart_labels=labels))

    def search(self, query: str, requester: str | None, limit: int = 20) -> list[dict]:
        visible = {
            iid for iid in self.catalog.items
            if self.catalog.can_read_item(requester, iid)
        }
        hits = self.index.search(query, visible, limit)
        for h in hits:
            item = self.catalog.items[h["item"]]
            h["name"] = item.name
            h["kind"] = item.kind
        return hits

    # ------------------------------------------------------------------
    # upload -> approval -> ingest
    # ------------------------------------------------------------------

    def stage_upload(self, workspace: str, name: str, description: str, data: bytes,
                     actor: str, delimiter: str = ",", quote: str = '"',
                     has_header: bool = True) -> dict:
        if len(data) > MAX_UPLOAD_BYTES:
            raise PayloadTooLarge("upload exceeds the 100 MB cap")
        if not self.catalog.authorize(actor, "upload", workspace):
            raise Unauthorized("upload grant required")
        raw = ingest.parse_csv(data, delimiter=delimiter, quote=quote, has_header=has_header)
        raw.source_note = f"csv upload {name!r}"
        infer = self.external_inferrer or ingest.infer_column_types
        proposal = infer(raw)
        staged_id = secrets.token_hex(8)
        self._staged[staged_id] = {
            "workspace": workspace, "name": name, "description": description,
            "raw": raw, "proposal": proposal, "actor": actor,
        }
        return {"id": staged_id, "proposal": proposal.as_dict(), "warnings": raw.warnings}

    def get_staged(self, staged_id: str) -> dict:
        if staged_id not in self._staged:
            raise UnknownItem(f"no staged upload {staged_id!r}")
        s = self._staged[staged_id]
        return {"id": staged_id, "proposal": s["proposal"].as_dict(), "warnings": s["raw"].warnings}

    def approve_upload(self, staged_id: str, corrections: dict[str, str], actor: str) -> DataItem:
        if staged_id not in self._staged:
            raise UnknownItem(f"no staged upload {staged_id!r}")
        s = self._staged[staged_id]
        if not self.catalog.authorize(actor, "upload", s["workspace"]):
            raise Unauthorized("upload grant required")
        approved = ingest.approve_schema(s["proposal"], _coerce_types(corrections), actor)
        item = self.ingest_table(s["workspace"], s["name"], s["description"],
                                 s["raw"], approved, actor)
        del self._staged[staged_id]
        return item

    def cancel_upload(self, staged_id: str):
        self._staged.pop(staged_id, None)

    def ingest_table(self, workspace: str, name: str, description: str,
                     raw: RawTable, schema: SchemaProposal, actor: str,
                     source_url: str = "", retrieved_at: str = "",
                     op: str = "ingest", params: dict | None = None) -> DataItem:
        if not schema.approved:
            raise SchemaNotApproved("schema proposal must be approved before ingestion")
        if not self.catalog.authorize(actor, "upload", workspace):
            raise Unauthorized("upload grant required")
        table = TypedTable(headers=raw.headers, types=schema.types(), rows=raw.rows)
        overridden = [c.name for c in schema.columns if c.overridden]
        item = self.catalog.register_item(
            workspace, name, description, "table",
            serialize_table(table), table.schema(), actor,
            activity={
                "kind": op,
                "params": params or {"op": op, "source_note": raw.source_note,
                                     "overridden_columns": overridden},
                "agent": actor,
                "used": [],
                "sources": [{"url": source_url, "note": raw.source_note,
                             "retrieved_at": retrieved_at}],
            },
        )
        self.index_item(item.id)
        return item

    # ------------------------------------------------------------------
    # relational ops
    # ------------------------------------------------------------------

    def _target_workspace(self, default_ws: str, workspace: str | None, actor: str,
                          grant: str) -> str:
        ws = workspace or default_ws
        if not self.catalog.authorize(actor, grant, ws):
            raise Unauthorized(f"{grant} grant required on the target workspace")
        return ws

    def _register_derived(self, ws: str, name: str | None, auto_base: str,
                          description: str, kind: str, content: bytes,
                          schema, actor: str, activity: dict) -> DataItem:
        final_name = name if name else self.catalog.unique_name(ws, auto_base)
        item = self.catalog.register_item(ws, final_name, description, kind,
                                          content, schema, actor, activity)
        self.index_item(item.id)
        return item

    def rename_columns(self, item_id: str, mapping: dict[str, str], actor: str,
                       name: str | None = None, description: str = "",
                       workspace: str | None = None) -> DataItem:
        src = self.catalog.require_read(actor, item_id)
        ws = self._target_workspace(src.workspace, workspace, actor, "transform")
        out = relops.rename_columns(self.catalog.get_table(item_id), mapping)
        return self._register_derived(
            ws, name, f"{src.name} (renamed)", description, "table",
            serialize_table(out), out.schema(), actor,
            {"kind": "rename", "params": {"op": "rename", "mapping": dict(mapping)},
             "agent": actor, "used": [(item_id, src.latest.number)]})

    def filter_rows(self, item_id: str, predicate: relops.Predicate, actor: str,
                    name: str | None = None, description: str = "",
                    workspace: str | None = None) -> DataItem:
        src = self.catalog.require_read(actor, item_id)
        ws = self._target_workspace(src.workspace, workspace, actor, "transform")
        out = relops.filter_rows(self.catalog.get_table(item_id), predicate)
        return self._register_derived(
            ws, name, f"{src.name} (filtered)", description, "table",
            serialize_table(out), out.schema(), actor,
            {"kind": "filter", "params": {"op": "filter", "predicate": predicate.to_wire()},
             "agent": actor, "used": [(item_id, src.latest.number)]})

    def select_columns(self, item_id: str, columns: list[str], actor: str,
                       name: str | None = None, description: str = "",
                       workspace: str | None = None) -> DataItem:
        src = self.catalog.require_read(actor, item_id)
        ws = self._target_workspace(src.workspace, workspace, actor, "transform")
        out = relops.select_columns(self.catalog.get_table(item_id), columns)
        return self._register_derived(
            ws, name, f"{src.name} (columns)", description, "table",
            serialize_table(out), out.schema(), actor,
            {"kind": "select", "params": {"op": "select", "columns": list(columns)},
             "agent": actor, "used": [(item_id, src.latest.number)]})

    def infer_join_keys(self, left_id: str, right_id: str,
                        requester: str | None) -> list[dict]:
        self.catalog.require_read(requester, left_id)
        self.catalog.require_read(requester, right_id)
        pairs = relops.infer_join_keys(self.catalog.get_table(left_id),
                                       self.catalog.get_table(right_id))
        return [{"left": l, "right": r, "score": s} for l, r, s in pairs]

    def merge(self, plan: relops.MergePlan, name: str, description: str, actor: str,
              workspace: str | None = None) -> DataItem:
        if len(plan.inputs) < 2:
            raise EmptyInputs("merge needs at least two input items")
        srcs = [self.catalog.require_read(actor, iid) for iid in plan.inputs]
        ws = self._target_workspace(srcs[0].workspace, workspace, actor, "transform")
        tables = [self.catalog.get_table(iid) for iid in plan.inputs]
        out = relops.merge_tables(tables, plan.keys, plan.output_columns)
        used = [(s.id, s.latest.number) for s in srcs]
        params = {"op": "merge", **plan.to_wire()}
        return self._register_derived(
            ws, name, name or "merge", description, "table",
            serialize_table(out), out.schema(), actor,
            {"kind": "merge", "params": params, "agent": actor, "used": used})

    # ------------------------------------------------------------------
    # charts
    # ------------------------------------------------------------------

    def create_chart(self, item_id: str, version: int | None, spec: charts.ChartSpec,
                     name: str, description: str, actor: str,
                     workspace: str | None = None) -> DataItem:
        src = self.catalog.require_read(actor, item_id)
        v = src.latest.number if version is None else src.version(version).number
        ws = self._target_workspace(src.workspace, workspace, actor, "visualize")
        table = self.catalog.get_table(item_id, v)
        doc = charts.compute_chart_data(table, spec, source=(item_id, v))
        return self._register_derived(
            ws, name, name or spec.kind, description, "chart",
            charts.canonical_doc_bytes(doc), None, actor,
            {"kind": "chart", "params": {"op": "chart", "spec": spec.to_wire()},
             "agent": actor, "used": [(item_id, v)]})

    def chart_data(self, chart_id: str, requester: str | None) -> dict:
        item = self.catalog.require_read(requester, chart_id)
        if item.kind != "chart":
            raise UnknownItem(f"item {chart_id!r} is not a chart")
        doc = json.loads(self.catalog.get_content(chart_id))
        src = doc.get("source", {}).get("item")
        if src and not self.catalog.can_read_item(requester, src):
            doc["source"] = {"redacted": True}
        return doc

    # ------------------------------------------------------------------
    # provenance: lineage, export, replay
    # ------------------------------------------------------------------

    def lineage(self, item_id: str, version: int | None, viewer: str | None) -> dict:
        return provenance.lineage_tree(self.catalog, item_id, version, viewer)

    def export_prov(self, item_id: str, version: int | None,
                    viewer: str | None) -> bytes:
        return provenance.export_prov(self.catalog, item_id, version, viewer).to_bytes()

    def replay(self, item_id: str, version: int | None, substitutions: dict[str, str],
               actor: str, workspace: str | None = None) -> DataItem:
        root = self.catalog.require_read(actor, item_id)
        v = root.latest.number if version is None else root.version(version).number
        ws = self._target_workspace(root.workspace, workspace, actor, "transform")
        steps = provenance.plan_replay(self.catalog, item_id, v, substitutions)
        for step in steps:  # replay reads every ancestor's content
            if not self.catalog.can_read_item(actor, substitutions.get(step.item, step.item)):
                # Deliberately id-free: ancestor ids must not leak through errors.
                raise Unauthorized("replay requires read access to every ancestor item")

        effective: dict[tuple[str, int], tuple[str, int]] = {}
        tables: dict[tuple[str, int], TypedTable] = {}
        out_item: DataItem | None = None
        for step in steps:
            key = (step.item, step.version)
            is_root = key == (item_id, v)
            if step.activity is None:
                if step.item in substitutions:
                    src_item = self.catalog.items[substitutions[step.item]]
                    ref = (src_item.id, src_item.latest.number)
                else:
                    # Unsubstituted boundary: the version recorded in the
                    # chain, not the latest (sources may have moved on).
                    src_item = self.catalog.items[step.item]
                    ref = (step.item, step.version)
                effective[key] = ref
                if src_item.kind == "table":
                    tables[key] = provenance.load_table_version(self.catalog, *ref)
                if is_root:
                    vr = src_item.version(ref[1])
                    orig_act = provenance.generating_activity(self.catalog, step.item, step.version)
                    out_item = self._register_derived(
                        ws, None, f"{root.name} (replay)", root.description,
                        src_item.kind, self.catalog.blobs.get(vr.hash), vr.schema, actor,
                        {"kind": orig_act.kind, "params": orig_act.params, "agent": actor,
                         "used": [], "sources": [
                             {"url": self.catalog.source_entities[s].url,
                              "note": self.catalog.source_entities[s].note,
                              "retrieved_at": self.catalog.source_entities[s].retrieved_at}
                             for s in orig_act.sources]})
                continue
            inputs = [(effective[(ui, uv)], tables[(ui, uv)]) for ui, uv in step.inputs]
            try:
                content, schema, kind = provenance.execute_descriptor(
                    step.activity.kind, step.activity.params, inputs)
            except DatalakeError as e:
                if substitutions:
                    raise SchemaIncompatibleSubstitution(e.message) from e
                raise
            original = self.catalog.items[step.item].version(step.version)
            changed = content_hash(content) != original.hash
            if kind == "table":
                tables[key] = deserialize_table(content, [ColumnType(c["type"]) for c in schema])
            if is_root or changed:
                base_name = self.catalog.items[step.item].name
                new = self._register_derived(
                    ws, None, f"{base_name} (replay)",
                    self.catalog.items[step.item].description, kind, content, schema, actor,
                    {"kind": step.activity.kind, "params": step.activity.params,
                     "agent": actor, "used": [ref for ref, _ in inputs]})
                effective[key] = (new.id, 1)
                if is_root:
                    out_item = new
            else:
                effective[key] = key
        assert out_item is not None
        return out_item

    # ------------------------------------------------------------------
    # versioning
    # ------------------------------------------------------------------

    def create_version(self, item_id: str, data: bytes, corrections: dict[str, str],
                       actor: str, delimiter: str = ",", quote: str = '"',
                       has_header: bool = True, dry_run_propagation: bool = False):
        item = self.catalog.require_read(actor, item_id)
        raw = ingest.parse_csv(data, delimiter=delimiter, quote=quote, has_header=has_header)
        prev_types = {c["name"]: ColumnType(c["type"]) for c in item.latest.schema or []}
        infer = self.external_inferrer or ingest.infer_column_types
        proposal = infer(raw)
        # Columns the item already had keep their approved types; new columns
        # run through inference (plus caller corrections), same flow as ingest.
        auto = {c.name: prev_types[c.name] for c in proposal.columns if c.name in prev_types}
        auto.update(_coerce_types(corrections))
        approved = ingest.approve_schema(proposal, auto, actor)
        table = TypedTable(headers=raw.headers, types=approved.types(), rows=raw.rows)
        record, report = versioning.create_version(
            self.catalog, self.index_item, item_id, table, actor,
            dry_run_propagation=dry_run_propagation)
        return record, report

    def propagate(self, item_id: str, actor: str, dry_run: bool = False) -> list[dict]:
        item = self.catalog.require_read(actor, item_id)
        if not self.catalog.can_manage_members(actor, item.workspace):
            raise Unauthorized("manual propagation is admin-only")
        return versioning.propagate(self.catalog, self.index_item, item_id, actor, dry_run=dry_run)

    def list_versions(self, item_id: str, viewer: str | None) -> list[dict]:
        return versioning.list_versions(self.catalog, item_id, viewer)

    # ------------------------------------------------------------------
    # data library
    # ------------------------------------------------------------------

    def list_sources(self) -> list[dict]:
        return self.sources.list_sources()

    def search_external(self, source: str, keywords: str) -> list[dict]:
        if not keywords.strip():
            return []
        adapter = self.sources.get(source)
        return [d.as_dict() for d in adapter.search(keywords)]

    def import_external(self, source: str, dataset: str, workspace: str, actor: str,
                        name: str | None = None, description: str | None = None) -> DataItem:
        if not self.catalog.authorize(actor, "upload", workspace):
            raise Unauthorized("upload grant required")
        adapter = self.sources.get(source)
        result = adapter.fetch(dataset)  # staged fully before any catalog write
        raw = result.table
        raw.source_note = f"data library import from {source}: {dataset}"
        infer = self.external_inferrer or ingest.infer_column_types
        approved = ingest.approve_schema(infer(raw), {}, actor)
        return self.ingest_table(
            workspace, name or result.title, description if description is not None else result.description,
            raw, approved, actor, source_url=result.url, retrieved_at=utcnow_iso(),
            op="import-external",
            params={"op": "import-external", "source": source, "dataset": dataset},
        )

    # ------------------------------------------------------------------
    # item access
    # ------------------------------------------------------------------

    def item_detail(self, item_id: str, requester: str | None) -> dict:
        item = self.catalog.require_read(requester, item_id)
        detail = item.as_dict()
        detail["workspace_path"] = self.catalog.workspace_path(item.workspace)
        if item.kind == "table":
            table = self.catalog.get_table(item_id)
            detail["row_count"] = len(table.rows)
        return detail

    def item_content(self, item_id: str, requester: str | None,
                     version: int | None = None) -> bytes:
        self.catalog.require_read(requester, item_id)
        return self.catalog.get_content(item_id, version)

    def items_in_workspace(self, workspace: str, requester: str | None) -> list[dict]:
        out = []
        for item in self.catalog.items_in_workspace(workspace):
            if self.catalog.can_read_item(requester, item.id):
                out.append({"id": item.id, "name": item.name, "kind": item.kind,
                            "visibility": item.visibility,
                            "versions": len(item.versions),
                            "description": item.description})
        return sorted(out, key=lambda d: d["name"])
