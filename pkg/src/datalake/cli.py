"""`lake` command line: subcommands map 1:1 onto the HTTP API.

Every command except `init` and `serve` talks to a running server
(`--server` / LAKE_SERVER, `--token` / LAKE_TOKEN). `--json` switches any
command to machine-readable output.
"""

from __future__ import annotations

import json
import os

import click
import requests


class Client:
    def __init__(self, server: str, token: str | None):
        self.server = server.rstrip("/")
        self.session = requests.Session()
        if token:
            self.session.headers["Authorization"] = f"Bearer {token}"

    def call(self, method: str, path: str, **kwargs):
        try:
            resp = self.session.request(method, f"{self.server}{path}", timeout=60, **kwargs)
        except requests.RequestException as e:
            raise click.ClickException(f"cannot reach server {self.server}: {e}")
        if resp.status_code >= 400:
            try:
                err = resp.json()["error"]
                raise click.ClickException(f"{err['code']}: {err['message']}")
            except (ValueError, KeyError):
                raise click.ClickException(f"HTTP {resp.status_code}: {resp.text[:300]}")
        if resp.headers.get("content-type", "").startswith("application/json"):
            return resp.json()
        return resp.content


pass_client = click.make_pass_decorator(Client)


def resolve_workspace(client: Client, value: str | None) -> str | None:
    """Accept a workspace id, name, or path wherever a workspace is expected."""
    if value is None:
        return None
    workspaces = client.call("GET", "/workspaces")
    if any(w["id"] == value for w in workspaces):
        return value
    matches = [w for w in workspaces if w["name"] == value or w.get("path") == value]
    if len(matches) == 1:
        return matches[0]["id"]
    if not matches:
        raise click.ClickException(f"no workspace named {value!r}")
    raise click.ClickException(f"workspace name {value!r} is ambiguous; use its id")


@click.group()
@click.option("--server", envvar="LAKE_SERVER", default="http://127.0.0.1:8000",
              show_default=True, help="Server base URL.")
@click.option("--token", envvar="LAKE_TOKEN", default=None, help="Bearer token.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, server, token, as_json):
    """Datalake command line."""
    ctx.obj = Client(server, token)
    ctx.obj.as_json = as_json


def emit(client: Client, payload, human=None):
    if client.as_json or human is None:
        click.echo(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        click.echo(human)


# ----------------------------------------------------------------------
# local commands
# ----------------------------------------------------------------------

@main.command()
@click.option("--root", envvar="LAKE_ROOT", required=True, type=click.Path())
@click.option("--admin", default="admin", show_default=True, help="Bootstrap admin user id.")
def init(root, admin):
    """Create a store directory and mint the first service admin."""
    from .service import Datalake
    lake = Datalake(root)
    if lake.catalog.users:
        raise click.ClickException(f"store at {root} already has users")
    user = lake.create_user(admin, service_admin=True, actor=None)
    lake.close()
    click.echo(f"store initialized at {root}")
    click.echo(f"admin user: {user.id}")
    click.echo(f"token: {user.token}")


@main.command()
@click.option("--root", envvar="LAKE_ROOT", required=True, type=click.Path())
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--worldbank-base", default="https://api.worldbank.org", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(), help="Static UI bundle directory.")
def serve(root, bind, worldbank_base, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .errors import CorruptJournal
    from .server import create_app
    from .service import Datalake

    host, _, port = bind.partition(":")
    try:
        lake = Datalake(root, worldbank_base=worldbank_base)
    except CorruptJournal as e:
        raise click.ClickException(
            f"refusing to start: corrupt journal at sequence {e.bad_seq}: {e.message}")
    if ui_dir is None and os.path.isdir("frontend/dist"):
        ui_dir = "frontend/dist"
    app = create_app(lake, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")


# ----------------------------------------------------------------------
# admin / workspaces / members
# ----------------------------------------------------------------------

@main.group()
def admin():
    """Administrative commands."""


@admin.command("create-user")
@click.argument("user")
@click.option("--service-admin", is_flag=True)
@pass_client
def create_user(client, user, service_admin):
    out = client.call("POST", "/admin/users", json={"user": user, "service_admin": service_admin})
    emit(client, out, f"user {out['user']} token: {out['token']}")


@main.group()
def workspace():
    """Workspace management."""


@workspace.command("create")
@click.argument("name")
@click.option("--parent", default=None)
@pass_client
def workspace_create(client, name, parent):
    out = client.call("POST", "/workspaces",
                      json={"name": name, "parent": resolve_workspace(client, parent)})
    emit(client, out, f"workspace {out['id']}: {out['name']}")


@workspace.command("list")
@pass_client
def workspace_list(client):
    out = client.call("GET", "/workspaces")
    emit(client, out, "\n".join(f"{w['id']}  {w['path']}" for w in out) or "(none)")


@main.group()
def member():
    """Workspace membership."""


@member.command("add")
@click.argument("workspace_id")
@click.argument("user")
@click.option("--role", type=click.Choice(["admin", "staff", "guest"]), required=True)
@click.option("--grants", default="", help="Comma-separated grants for staff.")
@pass_client
def member_add(client, workspace_id, user, role, grants):
    workspace_id = resolve_workspace(client, workspace_id)
    grant_list = [g for g in grants.split(",") if g]
    out = client.call("POST", f"/workspaces/{workspace_id}/members",
                      json={"user": user, "role": role, "grants": grant_list})
    emit(client, out, f"{out['user']}: {out['role']} {out['grants']}")


# ----------------------------------------------------------------------
# upload and items
# ----------------------------------------------------------------------

@main.command()
@click.argument("csvfile", type=click.File("rb"))
@click.option("--workspace", required=True)
@click.option("--name", required=True)
@click.option("--description", default="")
@click.option("--type", "type_overrides", multiple=True, metavar="COL=TYPE",
              help="Correct an inferred column type.")
@click.option("--yes", is_flag=True, help="Approve the proposal without prompting.")
@pass_client
def upload(client, csvfile, workspace, name, description, type_overrides, yes):
    """Upload a CSV, review inferred column types, and ingest."""
    workspace = resolve_workspace(client, workspace)
    staged = client.call("POST", "/items", files={"file": (name, csvfile.read(), "text/csv")},
                         data={"workspace": workspace, "name": name, "description": description})
    proposal = staged["proposal"]
    if not client.as_json:
        click.echo("inferred schema:")
        for col in proposal["columns"]:
            samples = ", ".join(col["samples"][:3])
            click.echo(f"  {col['name']:<32} {col['inferred_type']:<12} "
                       f"confidence {col['confidence']:.2f}" +
                       (f"  e.g. {samples}" if samples else ""))
        for w in staged.get("warnings", []):
            click.echo(f"  warning: {w}")
    corrections = {}
    for ov in type_overrides:
        col, _, ctype = ov.partition("=")
        corrections[col] = ctype
    if not yes and not client.as_json:
        if not click.confirm("approve this schema?", default=True):
            client.call("DELETE", f"/items/{staged['id']}/schema")
            raise click.ClickException("upload cancelled")
    out = client.call("POST", f"/items/{staged['id']}/schema:approve",
                      json={"corrections": corrections})
    emit(client, out, f"item {out['id']}: {out['name']} v{out['versions'][-1]['number']}")


@main.command()
@click.argument("workspace_id")
@pass_client
def items(client, workspace_id):
    """List items in a workspace."""
    workspace_id = resolve_workspace(client, workspace_id)
    out = client.call("GET", f"/workspaces/{workspace_id}/items")
    emit(client, out, "\n".join(
        f"{i['id']}  {i['kind']:<6} v{i['versions']}  {i['visibility']:<8} {i['name']}"
        for i in out) or "(none)")


@main.command()
@click.argument("item_id")
@pass_client
def item(client, item_id):
    """Show item metadata."""
    out = client.call("GET", f"/items/{item_id}")
    human = (f"{out['id']}  {out['kind']}  {out['name']}\n"
             f"workspace: {out['workspace_path']}  visibility: {out['visibility']}\n"
             f"permalink: /p/{out['permalink_token']}\n"
             f"versions: {len(out['versions'])}")
    emit(client, out, human)


@main.command()
@click.argument("item_id")
@click.option("-o", "--output", type=click.File("wb"), default=None)
@pass_client
def content(client, item_id, output):
    """Download item content (CSV or chart-data JSON)."""
    data = client.call("GET", f"/items/{item_id}/content")
    if isinstance(data, (dict, list)):
        data = json.dumps(data, indent=2).encode()
    (output or click.get_binary_stream("stdout")).write(data)


@main.command()
@click.argument("item_id")
@click.argument("visibility", type=click.Choice(["public", "private"]))
@pass_client
def visibility(client, item_id, visibility):
    """Mark an item public or private."""
    out = client.call("POST", f"/items/{item_id}/visibility", json={"visibility": visibility})
    emit(client, out, f"{out['id']} is now {out['visibility']}")


@main.command()
@click.argument("token")
@pass_client
def permalink(client, token):
    """Resolve a permalink token."""
    out = client.call("GET", f"/p/{token}")
    emit(client, out, f"{out['id']}  {out['kind']}  {out['name']} (v{out['latest_version']})")


# ----------------------------------------------------------------------
# relational ops
# ----------------------------------------------------------------------

def _parse_where(clauses) -> list[dict]:
    out = []
    ops = ["<=", ">=", "!=", "=", "<", ">", "~"]
    for clause in clauses:
        for op in ops:
            if op in clause:
                col, _, val = clause.partition(op)
                out.append({"column": col.strip(),
                            "op": "contains" if op == "~" else op,
                            "value": val.strip()})
                break
        else:
            raise click.ClickException(f"cannot parse predicate {clause!r}")
    return out


@main.command("filter")
@click.argument("item_id")
@click.option("--where", "clauses", multiple=True, required=True,
              metavar="'COL OP VALUE'", help="Predicate atom, e.g. 'TIME PERIOD=2012' or 'Rate<5'. ~ means contains.")
@click.option("--name", default=None)
@click.option("--description", default="")
@click.option("--workspace", default=None)
@pass_client
def filter_cmd(client, item_id, clauses, name, description, workspace):
    """Filter rows into a new item."""
    out = client.call("POST", "/ops/filter", json={
        "item": item_id, "predicate": _parse_where(clauses), "name": name,
        "description": description, "workspace": resolve_workspace(client, workspace)})
    emit(client, out, f"item {out['id']}: {out['name']}")


@main.command()
@click.argument("item_id")
@click.option("--columns", required=True, help="Comma-separated output columns, in order.")
@click.option("--name", default=None)
@click.option("--description", default="")
@click.option("--workspace", default=None)
@pass_client
def select(client, item_id, columns, name, description, workspace):
    """Select/reorder columns into a new item."""
    out = client.call("POST", "/ops/select", json={
        "item": item_id, "columns": [c.strip() for c in columns.split(",")], "name": name,
        "description": description, "workspace": resolve_workspace(client, workspace)})
    emit(client, out, f"item {out['id']}: {out['name']}")


@main.command()
@click.argument("item_id")
@click.option("--map", "mappings", multiple=True, required=True, metavar="OLD=NEW")
@click.option("--name", default=None)
@click.option("--description", default="")
@click.option("--workspace", default=None)
@pass_client
def rename(client, item_id, mappings, name, description, workspace):
    """Rename columns into a new item."""
    mapping = {}
    for m in mappings:
        old, _, new = m.partition("=")
        mapping[old] = new
    out = client.call("POST", "/ops/rename", json={
        "item": item_id, "mapping": mapping, "name": name,
        "description": description, "workspace": resolve_workspace(client, workspace)})
    emit(client, out, f"item {out['id']}: {out['name']}")


@main.command("infer-keys")
@click.argument("left")
@click.argument("right")
@pass_client
def infer_keys(client, left, right):
    """Suggest join key pairs for two tables."""
    out = client.call("POST", "/ops/merge:infer-keys", json={"left": left, "right": right})
    emit(client, out, "\n".join(f"{p['left']} = {p['right']}  (score {p['score']:.3f})"
                                for p in out) or "(no candidates)")


@main.command()
@click.argument("item_ids", nargs=-1, required=True)
@click.option("--keys", "key_specs", multiple=True, required=True, metavar="L=R[,L2=R2]",
              help="Join keys for each adjacent pair, left to right.")
@click.option("--columns", default=None, help="Comma-separated output columns.")
@click.option("--name", required=True)
@click.option("--description", default="")
@click.option("--workspace", default=None)
@pass_client
def merge(client, item_ids, key_specs, columns, name, description, workspace):
    """Merge (inner equi-join) two or more tables."""
    if len(item_ids) < 2:
        raise click.ClickException("merge needs at least two items")
    if len(key_specs) != len(item_ids) - 1:
        raise click.ClickException(f"need {len(item_ids) - 1} --keys option(s)")
    keys = []
    for spec in key_specs:
        pairs = []
        for pair in spec.split(","):
            left, _, right = pair.partition("=")
            pairs.append({"left": left.strip(), "right": right.strip()})
        keys.append(pairs)
    out = client.call("POST", "/ops/merge", json={
        "inputs": list(item_ids), "keys": keys,
        "output_columns": [c.strip() for c in columns.split(",")] if columns else None,
        "name": name, "description": description,
        "workspace": resolve_workspace(client, workspace)})
    emit(client, out, f"item {out['id']}: {out['name']}")


# ----------------------------------------------------------------------
# charts
# ----------------------------------------------------------------------

@main.command()
@click.argument("item_id")
@click.option("--kind", type=click.Choice(["bar", "line", "scatter2d", "scatter3d",
                                           "heatmap2d", "choropleth"]), required=True)
@click.option("--x", default=None)
@click.option("--y", default=None)
@click.option("--z", default=None)
@click.option("--color", default=None)
@click.option("--region", default=None)
@click.option("--aggregate", default="mean", type=click.Choice(["mean", "sum", "count"]))
@click.option("--bins", default="50x50", show_default=True, metavar="NXxNY")
@click.option("--interpolation", default="linear", type=click.Choice(["none", "linear"]))
@click.option("--title", default="")
@click.option("--name", required=True)
@click.option("--description", default="")
@click.option("--workspace", default=None)
@pass_client
def chart(client, item_id, kind, x, y, z, color, region, aggregate, bins,
          interpolation, title, name, description, workspace):
    """Compute and store a chart from a table item."""
    nx, _, ny = bins.partition("x")
    spec = {"kind": kind, "x": x, "y": y, "z": z, "color": color, "region": region,
            "aggregate": aggregate, "bins": [int(nx), int(ny or nx)],
            "interpolation": interpolation, "title": title or name}
    out = client.call("POST", f"/items/{item_id}/charts",
                      json={"spec": spec, "name": name, "description": description,
                            "workspace": resolve_workspace(client, workspace)})
    emit(client, out, f"chart {out['id']}: {out['name']}")


@main.command("chart-data")
@click.argument("chart_id")
@pass_client
def chart_data(client, chart_id):
    """Fetch a chart's computed data document."""
    out = client.call("GET", f"/charts/{chart_id}/data")
    emit(client, out)


# ----------------------------------------------------------------------
# provenance and versions
# ----------------------------------------------------------------------

def _render_tree(node: dict, prefix: str = "", is_last: bool = True,
                 is_root: bool = True) -> list[str]:
    if node.get("redacted"):
        label = f"[redacted {node['entity']}]"
    elif node.get("kind") == "external-source":
        src = node["attributes"].get("url") or node["attributes"].get("note") or "external source"
        label = f"source: {src}"
    else:
        a = node["attributes"]
        label = f"{a['name']} ({a['type']}, {a['operation']}, v{node['version']})"
    if is_root:
        lines = [label]
        child_prefix = ""
    else:
        lines = [prefix + ("└─ " if is_last else "├─ ") + label]
        child_prefix = prefix + ("   " if is_last else "│  ")
    children = node.get("children", [])
    for i, child in enumerate(children):
        lines.extend(_render_tree(child, child_prefix, i == len(children) - 1, False))
    return lines


@main.command()
@click.argument("item_id")
@click.option("--version", type=int, default=None)
@pass_client
def lineage(client, item_id, version):
    """Show the provenance tree of an item."""
    params = {"version": version} if version else {}
    out = client.call("GET", f"/items/{item_id}/lineage", params=params)
    emit(client, out, "\n".join(_render_tree(out)))


@main.command()
@click.argument("item_id")
@click.option("--version", type=int, default=None)
@click.option("-o", "--output", type=click.File("wb"), default=None)
@pass_client
def prov(client, item_id, version, output):
    """Export a PROV document for an item."""
    params = {"version": version} if version else {}
    data = client.call("GET", f"/items/{item_id}/prov.json", params=params)
    raw = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False).encode()
    (output or click.get_binary_stream("stdout")).write(raw + b"\n")


@main.command()
@click.argument("item_id")
@click.option("--substitute", "subs", multiple=True, metavar="OLD_ITEM=NEW_ITEM")
@click.option("--version", type=int, default=None)
@click.option("--workspace", default=None)
@pass_client
def replay(client, item_id, subs, version, workspace):
    """Re-execute an item's recorded pipeline, optionally over new inputs."""
    substitutions = {}
    for s in subs:
        old, _, new = s.partition("=")
        substitutions[old] = new
    out = client.call("POST", f"/items/{item_id}/replay",
                      json={"substitutions": substitutions, "version": version,
                            "workspace": resolve_workspace(client, workspace)})
    emit(client, out, f"replayed into item {out['id']}: {out['name']}")


@main.command()
@click.argument("item_id")
@pass_client
def versions(client, item_id):
    """List an item's versions with diff summaries."""
    out = client.call("GET", f"/items/{item_id}/versions")
    lines = []
    for v in out:
        stale = f"  STALE: {v['stale_reason']}" if v["stale"] else ""
        diff = ""
        if v.get("diff"):
            d = v["diff"]
            diff = f"  ({d['rows_delta']:+d} rows"
            if d["columns_added"]:
                diff += f", +{','.join(d['columns_added'])}"
            if d["columns_removed"]:
                diff += f", -{','.join(d['columns_removed'])}"
            diff += ")"
        lines.append(f"v{v['number']}  {v['hash'][:12]}  {v['created_at']}{diff}{stale}")
    emit(client, out, "\n".join(lines))


@main.command()
@click.argument("item_id")
@click.argument("csvfile", type=click.File("rb"))
@click.option("--correct", "corrections", multiple=True, metavar="COL=TYPE")
@pass_client
def version(client, item_id, csvfile, corrections):
    """Upload new content as the next version (derived items regenerate)."""
    corr = {}
    for c in corrections:
        col, _, ctype = c.partition("=")
        corr[col] = ctype
    out = client.call("POST", f"/items/{item_id}/versions",
                      files={"file": ("new.csv", csvfile.read(), "text/csv")},
                      data={"corrections": json.dumps(corr)})
    lines = [f"version v{out['version']['number']} created"]
    for p in out["propagation"]:
        lines.append(f"  {p['status']}: {p['item']}" + (f" -> v{p['version']}" if p["version"] else "")
                     + (f" ({p['reason']})" if p["reason"] else ""))
    emit(client, out, "\n".join(lines))


@main.command()
@click.argument("item_id")
@click.option("--dry-run", is_flag=True)
@pass_client
def propagate(client, item_id, dry_run):
    """Manually regenerate everything derived from an item (admin)."""
    out = client.call("POST", f"/items/{item_id}/propagate", json={"dry_run": dry_run})
    emit(client, out, "\n".join(f"{p['status']}: {p['item']}" for p in out) or "(nothing derived)")


# ----------------------------------------------------------------------
# search and data library
# ----------------------------------------------------------------------

@main.command()
@click.argument("query")
@click.option("--source", default=None, help="Search an external data-library source instead.")
@click.option("--limit", default=20, show_default=True)
@pass_client
def search(client, query, source, limit):
    """Search the lake, or an external source with --source."""
    if source:
        out = client.call("GET", f"/datalib/{source}/search", params={"q": query})
        emit(client, out, "\n".join(f"{d['dataset']:<28} {d['title']}" for d in out) or "(no results)")
    else:
        out = client.call("GET", "/search", params={"q": query, "limit": limit})
        emit(client, out, "\n".join(
            f"{h['item']}  {h['score']:.3f}  {h['name']}" for h in out) or "(no results)")


@main.command()
@pass_client
def sources(client):
    """List data-library sources."""
    out = client.call("GET", "/datalib/sources")
    emit(client, out, "\n".join(f"{s['id']:<12} {s['display_name']}" for s in out))


@main.command("import")
@click.option("--source", required=True)
@click.option("--dataset", required=True)
@click.option("--workspace", required=True)
@click.option("--name", default=None)
@click.option("--description", default=None)
@pass_client
def import_cmd(client, source, dataset, workspace, name, description):
    """Import an external dataset as a new table item."""
    out = client.call("POST", f"/datalib/{source}/import",
                      json={"dataset": dataset, "workspace": resolve_workspace(client, workspace),
                            "name": name, "description": description})
    emit(client, out, f"item {out['id']}: {out['name']}")


if __name__ == "__main__":
    main()
