// Typed client for the datalake frontdoor. Every call goes through one
// fetch wrapper so the tests can inject a recording fetch and assert the
// exact wire bodies.

import type {
  ChartDataDoc,
  ChartRequest,
  DataItem,
  ExternalDataset,
  InferredKey,
  ItemSummary,
  LineageNode,
  MergeRequest,
  PropagationEntry,
  SearchHit,
  SourceInfo,
  StagedUpload,
  VersionRecord,
  Workspace,
} from "./types.js";

export class ApiError extends Error {
  code: string;
  status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  base: string;
  token: string | null;
  private fetchImpl: FetchLike;

  constructor(base = "", token: string | null = null, fetchImpl?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.token = token;
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private headers(json = true): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async handle<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let code = `http-${resp.status}`;
      let message = resp.statusText;
      try {
        const body = await resp.json();
        if (body?.error) {
          code = body.error.code;
          message = body.error.message;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(code, message, resp.status);
    }
    return (await resp.json()) as T;
  }

  private get<T>(path: string, params?: Record<string, string>): Promise<T> {
    const qs = params ? `?${new URLSearchParams(params)}` : "";
    return this.fetchImpl(`${this.base}${path}${qs}`, { headers: this.headers(false) })
      .then((r) => this.handle<T>(r));
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(body),
    }).then((r) => this.handle<T>(r));
  }

  // -- identity ------------------------------------------------------

  whoami(): Promise<{ user: string | null; service_admin: boolean }> {
    return this.get("/whoami");
  }

  health(): Promise<{ status: string; items: number }> {
    return this.get("/healthz");
  }

  // -- workspaces ----------------------------------------------------

  listWorkspaces(): Promise<Workspace[]> {
    return this.get("/workspaces");
  }

  createWorkspace(name: string, parent: string | null = null): Promise<Workspace> {
    return this.post("/workspaces", { name, parent });
  }

  workspaceItems(id: string): Promise<ItemSummary[]> {
    return this.get(`/workspaces/${id}/items`);
  }

  // -- upload wizard ---------------------------------------------------

  stageUpload(workspace: string, name: string, description: string,
              file: File | Blob, filename = "upload.csv"): Promise<StagedUpload> {
    const form = new FormData();
    form.append("file", file, filename);
    form.append("workspace", workspace);
    form.append("name", name);
    form.append("description", description);
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return this.fetchImpl(`${this.base}/items`, {
      method: "POST", headers, body: form,
    }).then((r) => this.handle<StagedUpload>(r));
  }

  approveSchema(stagedId: string, corrections: Record<string, string>): Promise<DataItem> {
    return this.post(`/items/${stagedId}/schema:approve`, { corrections });
  }

  cancelUpload(stagedId: string): Promise<{ cancelled: string }> {
    return this.fetchImpl(`${this.base}/items/${stagedId}/schema`, {
      method: "DELETE", headers: this.headers(false),
    }).then((r) => this.handle<{ cancelled: string }>(r));
  }

  // -- items -----------------------------------------------------------

  itemDetail(id: string): Promise<DataItem> {
    return this.get(`/items/${id}`);
  }

  itemContent(id: string, version?: number): Promise<string> {
    const qs = version ? `?version=${version}` : "";
    return this.fetchImpl(`${this.base}/items/${id}/content${qs}`, {
      headers: this.headers(false),
    }).then(async (r) => {
      if (!r.ok) return this.handle<string>(r);
      return r.text();
    });
  }

  setVisibility(id: string, visibility: "public" | "private"): Promise<DataItem> {
    return this.post(`/items/${id}/visibility`, { visibility });
  }

  listVersions(id: string): Promise<(VersionRecord & { row_count?: number })[]> {
    return this.get(`/items/${id}/versions`);
  }

  // -- ops ---------------------------------------------------------------

  inferKeys(left: string, right: string): Promise<InferredKey[]> {
    return this.post("/ops/merge:infer-keys", { left, right });
  }

  merge(request: MergeRequest): Promise<DataItem> {
    return this.post("/ops/merge", request);
  }

  filterRows(item: string, predicate: { column: string; op: string; value: string }[],
             name: string | null = null): Promise<DataItem> {
    return this.post("/ops/filter", { item, predicate, name });
  }

  selectColumns(item: string, columns: string[], name: string | null = null): Promise<DataItem> {
    return this.post("/ops/select", { item, columns, name });
  }

  // -- provenance ----------------------------------------------------------

  lineage(id: string): Promise<LineageNode> {
    return this.get(`/items/${id}/lineage`);
  }

  provDocument(id: string): Promise<unknown> {
    return this.get(`/items/${id}/prov.json`);
  }

  replay(id: string, substitutions: Record<string, string> = {}): Promise<DataItem> {
    return this.post(`/items/${id}/replay`, { substitutions });
  }

  // -- charts ------------------------------------------------------------

  createChart(itemId: string, request: ChartRequest): Promise<DataItem> {
    return this.post(`/items/${itemId}/charts`, request);
  }

  chartData(chartId: string): Promise<ChartDataDoc> {
    return this.get(`/charts/${chartId}/data`);
  }

  // -- search and data library ---------------------------------------------

  search(q: string, limit = 20): Promise<SearchHit[]> {
    return this.get("/search", { q, limit: String(limit) });
  }

  sources(): Promise<SourceInfo[]> {
    return this.get("/datalib/sources");
  }

  datalibSearch(source: string, q: string): Promise<ExternalDataset[]> {
    return this.get(`/datalib/${source}/search`, { q });
  }

  datalibImport(source: string, dataset: string, workspace: string): Promise<DataItem> {
    return this.post(`/datalib/${source}/import`, { dataset, workspace });
  }

  // -- versions --------------------------------------------------------------

  addVersion(itemId: string, file: File | Blob, filename = "new-version.csv"):
      Promise<{ version: VersionRecord; propagation: PropagationEntry[] }> {
    const form = new FormData();
    form.append("file", file, filename);
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return this.fetchImpl(`${this.base}/items/${itemId}/versions`, {
      method: "POST", headers, body: form,
    }).then((r) => this.handle(r));
  }
}
