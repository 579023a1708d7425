"""Workspaces, members, permissions, the data-item registry, and persistence.

All state lives in memory and is rebuilt by folding the journal; every
mutation appends exactly one journal record and then applies it, under a
single writer lock (reads are lock-free snapshots of immutable-ish rows).
Provenance activities ride inside the item/version records they generate so
a version and its generating activity commit atomically.

Access control is a fixed role x action matrix:

    admin   all actions, plus manage-members
    staff   exactly its grant set (of upload/transform/visualize/version/share), plus read
    guest   read only
    none    nothing at workspace scope; public items remain readable by anyone

A service-level admin flag (minted via the admin CLI) bypasses the matrix;
it exists so the first workspace can be created at all.
"""

from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import errors
from .journal import BlobStore, Journal
from .table import ColumnType, TypedTable, content_hash, deserialize_table

ROLES = ("admin", "staff", "guest")
GRANTABLE_ACTIONS = ("upload", "transform", "visualize", "version", "share")
ACTIONS = ("read",) + GRANTABLE_ACTIONS
VISIBILITIES = ("public", "private")
ITEM_KINDS = ("table", "chart")

TRANSFORM_OPS = ("rename", "filter", "select", "merge", "chart", "new-version")
ACQUISITION_OPS = ("ingest", "import-external")
OPERATION_KINDS = ACQUISITION_OPS + TRANSFORM_OPS


def utcnow_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def new_id(prefix: str) -> str:
    return f"{prefix}-{secrets.token_hex(6)}"


def new_permalink_token() -> str:
    # 22 URL-safe chars, unique service-wide, immutable across versions.
    return secrets.token_urlsafe(16)


@dataclass
class User:
    id: str
    service_admin: bool = False
    token: str = ""


@dataclass
class Workspace:
    id: str
    name: str
    parent: str | None
    created_by: str
    created_at: str


@dataclass
class Member:
    user: str
    role: str
    grants: frozenset[str]


@dataclass
class VersionRecord:
    number: int
    hash: str
    created_by: str
    created_at: str
    stale: bool = False
    stale_reason: str | None = None
    schema: list[dict] | None = None  # [{name, type}] for tables, None for charts
    entity: str = ""

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "hash": self.hash,
            "created_by": self.created_by,
            "created_at": self.created_at,
            "stale": self.stale,
            "stale_reason": self.stale_reason,
            "schema": self.schema,
            "entity": self.entity,
        }


@dataclass
class DataItem:
    id: str
    workspace: str
    name: str
    description: str
    kind: str
    visibility: str
    permalink_token: str
    versions: list[VersionRecord] = field(default_factory=list)

    @property
    def latest(self) -> VersionRecord:
        return self.versions[-1]

    def version(self, n: int) -> VersionRecord:
        if not 1 <= n <= len(self.versions):
            raise errors.NotFound(f"{self.id} has no version {n}")
        return self.versions[n - 1]

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "workspace": self.workspace,
            "name": self.name,
            "description": self.description,
            "kind": self.kind,
            "visibility": self.visibility,
            "permalink_token": self.permalink_token,
            "versions": [v.as_dict() for v in self.versions],
        }


@dataclass
class SourceEntity:
    """External-source provenance entity; the leaf every ingest hangs from."""

    id: str
    url: str = ""
    note: str = ""
    retrieved_at: str = ""


@dataclass
class Activity:
    id: str
    kind: str
    params: dict
    agent: str
    timestamp: str
    used: list[tuple[str, int]]          # ordered (item id, version) inputs
    sources: list[str]                   # external-source entity ids
    output: tuple[str, int]
    entity: str                          # entity id generated for the output


class Catalog:
    """Journal-backed store shared by all modules; the single writer."""

    def __init__(self, root, fsync: bool = True):
        self.root = root
        self.journal = Journal(root, fsync=fsync)
        self.blobs = BlobStore(root)
        self.lock = threading.RLock()

        self.users: dict[str, User] = {}
        self.tokens: dict[str, str] = {}
        self.workspaces: dict[str, Workspace] = {}
        self.members: dict[str, dict[str, Member]] = {}
        self.items: dict[str, DataItem] = {}
        self.permalinks: dict[str, str] = {}
        self.activities: dict[str, Activity] = {}
        self.activity_by_output: dict[tuple[str, int], str] = {}
        self.entities: dict[str, tuple[str, int]] = {}   # entity id -> (item, version)
        self.source_entities: dict[str, SourceEntity] = {}
        self.consumers: dict[str, set[str]] = {}          # item id -> activity ids using it
        self.recovered_with_truncation = False

        for rec in self.journal.replay():
            self._apply(rec["kind"], rec["payload"])
        self.recovered_with_truncation = self.journal.truncated_tail

    # ------------------------------------------------------------------
    # journal application
    # ------------------------------------------------------------------

    def _commit(self, kind: str, payload: dict):
        with self.lock:
            self.journal.append(kind, payload, utcnow_iso())
            self._apply(kind, payload)

    def _apply(self, kind: str, p: dict):
        if kind == "user-added":
            u = User(id=p["user"], service_admin=p["service_admin"], token=p["token"])
            self.users[u.id] = u
            if u.token:
                self.tokens[u.token] = u.id
        elif kind == "workspace-created":
            w = Workspace(id=p["id"], name=p["name"], parent=p["parent"],
                          created_by=p["created_by"], created_at=p["created_at"])
            self.workspaces[w.id] = w
            self.members.setdefault(w.id, {})
        elif kind == "member-set":
            m = Member(user=p["user"], role=p["role"], grants=frozenset(p["grants"]))
            self.members.setdefault(p["workspace"], {})[m.user] = m
        elif kind == "item-created":
            item = DataItem(
                id=p["item"]["id"], workspace=p["item"]["workspace"], name=p["item"]["name"],
                description=p["item"]["description"], kind=p["item"]["kind"],
                visibility=p["item"]["visibility"], permalink_token=p["item"]["permalink_token"],
            )
            self.items[item.id] = item
            self.permalinks[item.permalink_token] = item.id
            self._apply_version(item, p["version"], p["activity"])
        elif kind == "version-added":
            self._apply_version(self.items[p["item"]], p["version"], p["activity"])
        elif kind == "visibility-set":
            self.items[p["item"]].visibility = p["visibility"]
        elif kind == "stale-marked":
            v = self.items[p["item"]].version(p["version"])
            v.stale = True
            v.stale_reason = p["reason"]
        else:
            raise errors.CorruptJournal(f"unknown journal record kind {kind!r}")

    def _apply_version(self, item: DataItem, vp: dict, ap: dict):
        v = VersionRecord(
            number=vp["number"], hash=vp["hash"], created_by=vp["created_by"],
            created_at=vp["created_at"], schema=vp.get("schema"), entity=vp["entity"],
        )
        item.versions.append(v)
        self.entities[v.entity] = (item.id, v.number)
        for sp in ap.get("sources_full", []):
            self.source_entities[sp["id"]] = SourceEntity(
                id=sp["id"], url=sp.get("url", ""), note=sp.get("note", ""),
                retrieved_at=sp.get("retrieved_at", ""),
            )
        act = Activity(
            id=ap["id"], kind=ap["kind"], params=ap["params"], agent=ap["agent"],
            timestamp=ap["timestamp"], used=[(u["item"], u["version"]) for u in ap["used"]],
            sources=[sp["id"] for sp in ap.get("sources_full", [])],
            output=(item.id, v.number), entity=v.entity,
        )
        self.activities[act.id] = act
        self.activity_by_output[(item.id, v.number)] = act.id
        for used_item, _ in act.used:
            self.consumers.setdefault(used_item, set()).add(act.id)

    # ------------------------------------------------------------------
    # users and authentication
    # ------------------------------------------------------------------

    def add_user(self, user_id: str, service_admin: bool = False, token: str | None = None) -> User:
        with self.lock:
            if user_id in self.users:
                raise errors.DuplicateSiblingName(f"user {user_id!r} already exists")
            tok = token if token is not None else secrets.token_urlsafe(24)
            self._commit("user-added", {"user": user_id, "service_admin": service_admin, "token": tok})
            return self.users[user_id]

    def user_for_token(self, token: str) -> str | None:
        return self.tokens.get(token)

    def is_service_admin(self, user: str | None) -> bool:
        return user is not None and user in self.users and self.users[user].service_admin

    # ------------------------------------------------------------------
    # authorization matrix
    # ------------------------------------------------------------------

    def membership(self, user: str | None, workspace: str) -> Member | None:
        if user is None:
            return None
        return self.members.get(workspace, {}).get(user)

    def authorize(self, user: str | None, action: str, workspace: str) -> bool:
        """Pure matrix decision for workspace-scoped actions (no exceptions)."""
        if self.is_service_admin(user):
            return True
        m = self.membership(user, workspace)
        if m is None:
            return False
        if m.role == "admin":
            return True
        if m.role == "staff":
            return action == "read" or action in m.grants
        if m.role == "guest":
            return action == "read"
        return False

    def can_manage_members(self, user: str | None, workspace: str) -> bool:
        if self.is_service_admin(user):
            return True
        m = self.membership(user, workspace)
        return m is not None and m.role == "admin"

    def can_read_item(self, user: str | None, item_id: str) -> bool:
        item = self.items.get(item_id)
        if item is None:
            return False
        if item.visibility == "public":
            return True
        return self.authorize(user, "read", item.workspace)

    def require_read(self, user: str | None, item_id: str) -> DataItem:
        if item_id not in self.items:
            raise errors.UnknownItem(f"no item {item_id!r}")
        if not self.can_read_item(user, item_id):
            raise errors.Unauthorized(f"not allowed to read item {item_id!r}")
        return self.items[item_id]

    # ------------------------------------------------------------------
    # workspaces and members
    # ------------------------------------------------------------------

    def create_workspace(self, name: str, parent: str | None, creator: str) -> Workspace:
        with self.lock:
            if not name:
                raise errors.Unparseable("workspace name must be nonempty")
            if parent is not None and parent not in self.workspaces:
                raise errors.UnknownWorkspace(f"no workspace {parent!r}")
            if parent is None:
                if not self.is_service_admin(creator):
                    raise errors.Unauthorized("top-level workspaces require a service admin")
            else:
                if not self.can_manage_members(creator, parent):
                    raise errors.Unauthorized("sub-workspaces require admin of the parent")
            siblings = [w for w in self.workspaces.values() if w.parent == parent]
            if any(w.name == name for w in siblings):
                raise errors.DuplicateSiblingName(f"workspace {name!r} already exists under this parent")
            wid = new_id("ws")
            self._commit("workspace-created", {
                "id": wid, "name": name, "parent": parent,
                "created_by": creator, "created_at": utcnow_iso(),
            })
            self._commit("member-set", {"workspace": wid, "user": creator, "role": "admin", "grants": []})
            return self.workspaces[wid]

    def add_member(self, workspace: str, user: str, role: str, grants, actor: str) -> Member:
        with self.lock:
            if workspace not in self.workspaces:
                raise errors.UnknownWorkspace(f"no workspace {workspace!r}")
            if not self.can_manage_members(actor, workspace):
                raise errors.Unauthorized("only workspace admins manage members")
            if role not in ROLES:
                raise errors.InvalidGrantsForRole(f"unknown role {role!r}")
            grants = frozenset(grants)
            if not grants <= set(GRANTABLE_ACTIONS):
                raise errors.InvalidGrantsForRole(f"unknown grants {sorted(grants - set(GRANTABLE_ACTIONS))}")
            if role == "guest" and grants:
                raise errors.InvalidGrantsForRole("guest role requires an empty grant set")
            self._commit("member-set", {
                "workspace": workspace, "user": user, "role": role, "grants": sorted(grants),
            })
            return self.members[workspace][user]

    def workspace_path(self, workspace: str) -> str:
        parts = []
        w = self.workspaces.get(workspace)
        while w is not None:
            parts.append(w.name)
            w = self.workspaces.get(w.parent) if w.parent else None
        return "/".join(reversed(parts))

    # ------------------------------------------------------------------
    # items, versions, visibility, permalinks
    # ------------------------------------------------------------------

    def items_in_workspace(self, workspace: str) -> list[DataItem]:
        return [it for it in self.items.values() if it.workspace == workspace]

    def unique_name(self, workspace: str, base: str) -> str:
        taken = {it.name for it in self.items_in_workspace(workspace)}
        if base not in taken:
            return base
        n = 2
        while f"{base} ({n})" in taken:
            n += 1
        return f"{base} ({n})"

    def register_item(self, workspace: str, name: str, description: str, kind: str,
                      content: bytes, schema: list[dict] | None, creator: str,
                      activity: dict) -> DataItem:
        """Persist content + item v1 + its generating activity atomically."""
        with self.lock:
            if workspace not in self.workspaces:
                raise errors.UnknownWorkspace(f"no workspace {workspace!r}")
            if not name:
                raise errors.Unparseable("item name must be nonempty")
            if any(it.name == name for it in self.items_in_workspace(workspace)):
                raise errors.DuplicateNameInWorkspace(f"item {name!r} already exists in workspace")
            digest = self.blobs.put(content)
            item_id = new_id("it")
            token = new_permalink_token()
            while token in self.permalinks:
                token = new_permalink_token()
            payload = {
                "item": {
                    "id": item_id, "workspace": workspace, "name": name,
                    "description": description, "kind": kind,
                    "visibility": "private", "permalink_token": token,
                },
                "version": self._version_payload(1, digest, creator, schema),
                "activity": self._activity_payload(activity),
            }
            self._validate_activity(payload["activity"], (item_id, 1))
            self._commit("item-created", payload)
            return self.items[item_id]

    def add_version(self, item_id: str, content: bytes, schema: list[dict] | None,
                    creator: str, activity: dict) -> VersionRecord:
        with self.lock:
            item = self.items[item_id]
            digest = self.blobs.put(content)
            n = len(item.versions) + 1
            payload = {
                "item": item_id,
                "version": self._version_payload(n, digest, creator, schema),
                "activity": self._activity_payload(activity),
            }
            self._validate_activity(payload["activity"], (item_id, n))
            self._commit("version-added", payload)
            return item.version(n)

    def _version_payload(self, n: int, digest: str, creator: str, schema) -> dict:
        return {
            "number": n, "hash": digest, "created_by": creator,
            "created_at": utcnow_iso(), "schema": schema, "entity": new_id("en"),
        }

    def _activity_payload(self, a: dict) -> dict:
        sources_full = []
        for s in a.get("sources", []):
            sources_full.append({
                "id": new_id("sr"), "url": s.get("url", ""), "note": s.get("note", ""),
                "retrieved_at": s.get("retrieved_at", ""),
            })
        return {
            "id": new_id("ac"), "kind": a["kind"], "params": a.get("params", {}),
            "agent": a["agent"], "timestamp": utcnow_iso(),
            "used": [{"item": i, "version": v} for i, v in a.get("used", [])],
            "sources_full": sources_full,
        }

    def _validate_activity(self, ap: dict, output: tuple[str, int]):
        if ap["kind"] not in OPERATION_KINDS:
            raise errors.Unparseable(f"unknown operation kind {ap['kind']!r}")
        if output in self.activity_by_output:
            raise errors.DuplicateGeneration(f"{output} already has a generating activity")
        for u in ap["used"]:
            key = (u["item"], u["version"])
            if u["item"] == output[0] and u["version"] >= output[1]:
                raise errors.Unparseable("activity may not use its own output")
            if u["item"] not in self.items or key not in {
                (u["item"], v.number) for v in self.items[u["item"]].versions
            }:
                raise errors.UnknownItem(f"activity input {key} does not exist")

    def record_operation(self, descriptor: dict, inputs: list[tuple[str, int]],
                         output: tuple[str, int], agent: str) -> Activity:
        """Guarded activity append for an already-produced output version.

        Versions and their generating activities commit atomically through
        register_item/add_version, so this standalone entry can only ever
        detect misuse: an existing output already has its activity
        (duplicate-generation), and a missing one cannot be recorded against.
        """
        with self.lock:
            item = self.items.get(output[0])
            if item is None or not 1 <= output[1] <= len(item.versions):
                raise errors.UnknownItem(f"activity output {output} does not exist")
            ap = self._activity_payload({
                "kind": descriptor.get("op", ""), "params": descriptor,
                "agent": agent, "used": inputs,
            })
            self._validate_activity(ap, output)
            raise AssertionError("unreachable: every existing version has an activity")

    def set_visibility(self, item_id: str, visibility: str, actor: str) -> DataItem:
        with self.lock:
            if item_id not in self.items:
                raise errors.UnknownItem(f"no item {item_id!r}")
            if visibility not in VISIBILITIES:
                raise errors.Unparseable(f"unknown visibility {visibility!r}")
            item = self.items[item_id]
            m = self.membership(actor, item.workspace)
            allowed = self.can_manage_members(actor, item.workspace) or (
                m is not None and m.role == "staff" and "share" in m.grants
            )
            if not allowed:
                raise errors.Unauthorized("visibility changes require admin or a share grant")
            if item.visibility != visibility:
                self._commit("visibility-set", {"item": item_id, "visibility": visibility})
            return item

    def mark_stale(self, item_id: str, version: int, reason: str):
        with self.lock:
            self.items[item_id].version(version)  # existence check
            if not reason:
                raise errors.Unparseable("stale mark requires a reason")
            self._commit("stale-marked", {"item": item_id, "version": version, "reason": reason})

    def resolve_permalink(self, token: str, requester: str | None) -> DataItem:
        item_id = self.permalinks.get(token)
        if item_id is None:
            raise errors.NotFound("no such permalink")
        if not self.can_read_item(requester, item_id):
            raise errors.Unauthorized("item is private")
        return self.items[item_id]

    # ------------------------------------------------------------------
    # content access
    # ------------------------------------------------------------------

    def get_content(self, item_id: str, version: int | None = None) -> bytes:
        item = self.items[item_id]
        v = item.latest if version is None else item.version(version)
        return self.blobs.get(v.hash)

    def get_table(self, item_id: str, version: int | None = None) -> TypedTable:
        item = self.items[item_id]
        if item.kind != "table":
            raise errors.KindMismatch(f"item {item_id!r} is a {item.kind}, not a table")
        v = item.latest if version is None else item.version(version)
        types = [ColumnType(c["type"]) for c in v.schema or []]
        return deserialize_table(self.blobs.get(v.hash), types)

    # ------------------------------------------------------------------
    # integrity
    # ------------------------------------------------------------------

    def state_hash(self) -> str:
        """Digest of the full in-memory state (journal replay idempotence checks)."""
        state = {
            "users": {u.id: [u.service_admin, u.token] for u in self.users.values()},
            "workspaces": {w.id: [w.name, w.parent, w.created_by, w.created_at] for w in self.workspaces.values()},
            "members": {ws: {m.user: [m.role, sorted(m.grants)] for m in mm.values()}
                        for ws, mm in self.members.items()},
            "items": {it.id: it.as_dict() for it in self.items.values()},
            "activities": {
                a.id: [a.kind, a.params, a.agent, a.timestamp, a.used, a.sources, list(a.output), a.entity]
                for a in self.activities.values()
            },
            "sources": {s.id: [s.url, s.note, s.retrieved_at] for s in self.source_entities.values()},
        }
        return content_hash(json.dumps(state, sort_keys=True, ensure_ascii=False).encode("utf-8"))

    def close(self):
        self.journal.close()
