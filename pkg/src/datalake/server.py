"""HTTP/JSON frontdoor: the only process boundary of the service.

Bearer-token auth; requests without a token act as the anonymous principal
(public reads only). Error bodies are {"error": {"code", "message"}} with
the stable machine codes from the module error vocabularies.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import Depends, FastAPI, File, Form, Header, Query, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .charts import ChartSpec
from .errors import DatalakeError, Unauthorized
from .relops import MergePlan, Predicate
from .service import Datalake

logger = logging.getLogger(__name__)


class WorkspaceBody(BaseModel):
    name: str
    parent: str | None = None


class MemberBody(BaseModel):
    user: str
    role: str
    grants: list[str] = Field(default_factory=list)


class ApproveBody(BaseModel):
    corrections: dict[str, str] = Field(default_factory=dict)


class FilterBody(BaseModel):
    item: str
    predicate: list[dict]
    name: str | None = None
    description: str = ""
    workspace: str | None = None


class SelectBody(BaseModel):
    item: str
    columns: list[str]
    name: str | None = None
    description: str = ""
    workspace: str | None = None


class RenameBody(BaseModel):
    item: str
    mapping: dict[str, str]
    name: str | None = None
    description: str = ""
    workspace: str | None = None


class MergeBody(BaseModel):
    inputs: list[str]
    keys: list[list[dict]]
    output_columns: list[str] | None = None
    name: str
    description: str = ""
    workspace: str | None = None


class InferKeysBody(BaseModel):
    left: str
    right: str


class ReplayBody(BaseModel):
    substitutions: dict[str, str] = Field(default_factory=dict)
    version: int | None = None
    workspace: str | None = None


class ChartBody(BaseModel):
    spec: dict
    name: str
    description: str = ""
    version: int | None = None
    workspace: str | None = None


class ImportBody(BaseModel):
    dataset: str
    workspace: str
    name: str | None = None
    description: str | None = None


class VisibilityBody(BaseModel):
    visibility: str


class UserBody(BaseModel):
    user: str
    service_admin: bool = False


class PropagateBody(BaseModel):
    dry_run: bool = False


def _workspace_dict(w) -> dict:
    return {"id": w.id, "name": w.name, "parent": w.parent}


def create_app(lake: Datalake, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="datalake", version=__version__)
    app.state.lake = lake

    @app.exception_handler(DatalakeError)
    async def datalake_error(_req: Request, exc: DatalakeError):
        return JSONResponse(status_code=exc.http_status,
                            content={"error": {"code": exc.code, "message": exc.message}})

    def principal(authorization: str | None = Header(default=None)) -> str | None:
        if not authorization:
            return None
        scheme, _, token = authorization.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise Unauthorized("malformed Authorization header")
        user = lake.catalog.user_for_token(token.strip())
        if user is None:
            raise Unauthorized("unknown token")
        return user

    def require_user(user: str | None = Depends(principal)) -> str:
        if user is None:
            raise Unauthorized("this endpoint requires authentication")
        return user

    # -- health and identity -------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "items": len(lake.catalog.items),
                "recovered_with_truncation": lake.catalog.recovered_with_truncation}

    @app.get("/whoami")
    def whoami(user: str | None = Depends(principal)):
        return {"user": user, "service_admin": lake.catalog.is_service_admin(user)}

    @app.post("/admin/users")
    def create_user(body: UserBody, user: str = Depends(require_user)):
        u = lake.create_user(body.user, body.service_admin, user)
        return {"user": u.id, "token": u.token, "service_admin": u.service_admin}

    # -- workspaces and members ----------------------------------------

    @app.post("/workspaces")
    def create_workspace(body: WorkspaceBody, user: str = Depends(require_user)):
        return _workspace_dict(lake.create_workspace(body.name, body.parent, user))

    @app.get("/workspaces")
    def list_workspaces(user: str | None = Depends(principal)):
        return lake.list_workspaces(user)

    @app.post("/workspaces/{workspace_id}/members")
    def add_member(workspace_id: str, body: MemberBody, user: str = Depends(require_user)):
        m = lake.add_member(workspace_id, body.user, body.role, body.grants, user)
        return {"user": m.user, "role": m.role, "grants": sorted(m.grants)}

    @app.get("/workspaces/{workspace_id}/items")
    def workspace_items(workspace_id: str, user: str | None = Depends(principal)):
        return lake.items_in_workspace(workspace_id, user)

    # -- upload, approval, items ---------------------------------------

    @app.post("/items")
    async def upload_item(
        file: UploadFile = File(...),
        workspace: str = Form(...),
        name: str = Form(...),
        description: str = Form(""),
        delimiter: str = Form(","),
        quote: str = Form('"'),
        has_header: bool = Form(True),
        user: str = Depends(require_user),
    ):
        data = await file.read()
        return lake.stage_upload(workspace, name, description, data, user,
                                 delimiter=delimiter, quote=quote, has_header=has_header)

    @app.get("/items/{staged_id}/schema")
    def staged_schema(staged_id: str, user: str = Depends(require_user)):
        return lake.get_staged(staged_id)

    @app.post("/items/{staged_id}/schema:approve")
    def approve_schema(staged_id: str, body: ApproveBody, user: str = Depends(require_user)):
        return lake.approve_upload(staged_id, body.corrections, user).as_dict()

    @app.delete("/items/{staged_id}/schema")
    def cancel_upload(staged_id: str, user: str = Depends(require_user)):
        lake.cancel_upload(staged_id)
        return {"cancelled": staged_id}

    @app.get("/items/{item_id}")
    def item_detail(item_id: str, user: str | None = Depends(principal)):
        return lake.item_detail(item_id, user)

    @app.get("/items/{item_id}/content")
    def item_content(item_id: str, version: int | None = Query(default=None),
                     user: str | None = Depends(principal)):
        item = lake.catalog.require_read(user, item_id)
        data = lake.item_content(item_id, user, version)
        media = "text/csv" if item.kind == "table" else "application/json"
        return Response(content=data, media_type=media)

    @app.post("/items/{item_id}/visibility")
    def set_visibility(item_id: str, body: VisibilityBody, user: str = Depends(require_user)):
        return lake.set_visibility(item_id, body.visibility, user).as_dict()

    # -- relational ops -------------------------------------------------

    @app.post("/ops/filter")
    def op_filter(body: FilterBody, user: str = Depends(require_user)):
        pred = Predicate.from_wire(body.predicate)
        return lake.filter_rows(body.item, pred, user, name=body.name,
                                description=body.description, workspace=body.workspace).as_dict()

    @app.post("/ops/select")
    def op_select(body: SelectBody, user: str = Depends(require_user)):
        return lake.select_columns(body.item, body.columns, user, name=body.name,
                                   description=body.description, workspace=body.workspace).as_dict()

    @app.post("/ops/rename")
    def op_rename(body: RenameBody, user: str = Depends(require_user)):
        return lake.rename_columns(body.item, body.mapping, user, name=body.name,
                                   description=body.description, workspace=body.workspace).as_dict()

    @app.post("/ops/merge")
    def op_merge(body: MergeBody, user: str = Depends(require_user)):
        plan = MergePlan.from_wire({"inputs": body.inputs, "keys": body.keys,
                                    "output_columns": body.output_columns})
        return lake.merge(plan, body.name, body.description, user,
                          workspace=body.workspace).as_dict()

    @app.post("/ops/merge:infer-keys")
    def op_infer_keys(body: InferKeysBody, user: str | None = Depends(principal)):
        return lake.infer_join_keys(body.left, body.right, user)

    # -- provenance -----------------------------------------------------

    @app.get("/items/{item_id}/lineage")
    def lineage(item_id: str, version: int | None = Query(default=None),
                user: str | None = Depends(principal)):
        return lake.lineage(item_id, version, user)

    @app.get("/items/{item_id}/prov.json")
    def prov_json(item_id: str, version: int | None = Query(default=None),
                  user: str | None = Depends(principal)):
        return Response(content=lake.export_prov(item_id, version, user),
                        media_type="application/json")

    @app.post("/items/{item_id}/replay")
    def replay(item_id: str, body: ReplayBody, user: str = Depends(require_user)):
        return lake.replay(item_id, body.version, body.substitutions, user,
                           workspace=body.workspace).as_dict()

    # -- versions -------------------------------------------------------

    @app.post("/items/{item_id}/versions")
    async def add_version(
        item_id: str,
        file: UploadFile = File(...),
        corrections: str = Form("{}"),
        delimiter: str = Form(","),
        quote: str = Form('"'),
        has_header: bool = Form(True),
        dry_run_propagation: bool = Form(False),
        user: str = Depends(require_user),
    ):
        data = await file.read()
        record, report = lake.create_version(
            item_id, data, json.loads(corrections), user, delimiter=delimiter,
            quote=quote, has_header=has_header, dry_run_propagation=dry_run_propagation)
        return {"version": record.as_dict(), "propagation": report}

    @app.get("/items/{item_id}/versions")
    def list_versions(item_id: str, user: str | None = Depends(principal)):
        return lake.list_versions(item_id, user)

    @app.post("/items/{item_id}/propagate")
    def propagate(item_id: str, body: PropagateBody, user: str = Depends(require_user)):
        return lake.propagate(item_id, user, dry_run=body.dry_run)

    # -- search ----------------------------------------------------------

    @app.get("/search")
    def search(q: str = Query(default=""), limit: int = Query(default=20, ge=1, le=200),
               user: str | None = Depends(principal)):
        return lake.search(q, user, limit)

    # -- data library ----------------------------------------------------

    @app.get("/datalib/sources")
    def datalib_sources():
        return lake.list_sources()

    @app.get("/datalib/{source}/search")
    def datalib_search(source: str, q: str = Query(default="")):
        return lake.search_external(source, q)

    @app.post("/datalib/{source}/import")
    def datalib_import(source: str, body: ImportBody, user: str = Depends(require_user)):
        return lake.import_external(source, body.dataset, body.workspace, user,
                                    name=body.name, description=body.description).as_dict()

    # -- charts ----------------------------------------------------------

    @app.post("/items/{item_id}/charts")
    def create_chart(item_id: str, body: ChartBody, user: str = Depends(require_user)):
        spec = ChartSpec.from_wire(body.spec)
        return lake.create_chart(item_id, body.version, spec, body.name,
                                 body.description, user, workspace=body.workspace).as_dict()

    @app.get("/charts/{chart_id}/data")
    def chart_data(chart_id: str, user: str | None = Depends(principal)):
        return lake.chart_data(chart_id, user)

    # -- permalinks -------------------------------------------------------

    @app.get("/p/{token}")
    def permalink(token: str, user: str | None = Depends(principal)):
        item = lake.resolve_permalink(token, user)
        return {"id": item.id, "name": item.name, "kind": item.kind,
                "workspace": item.workspace, "visibility": item.visibility,
                "latest_version": item.latest.number}

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:
        @app.get("/ui")
        def ui_placeholder():
            return PlainTextResponse("UI bundle not built; see frontend/README.md", status_code=404)

    return app
