// Wire types for the datalake HTTP API. These mirror the documented JSON
// forms; the contract tests pin them against recorded server fixtures.

export type ColumnType =
  | "Categorical"
  | "Numerical"
  | "Location"
  | "URL"
  | "Text"
  | "Temporal";

export const COLUMN_TYPES: ColumnType[] = [
  "Categorical", "Numerical", "Location", "URL", "Text", "Temporal",
];

export interface ColumnProposal {
  name: string;
  inferred_type: ColumnType;
  confidence: number;
  samples: string[];
  overridden: boolean;
}

export interface SchemaProposal {
  status: "pending" | "approved";
  columns: ColumnProposal[];
}

export interface StagedUpload {
  id: string;
  proposal: SchemaProposal;
  warnings: string[];
}

export interface SchemaColumn {
  name: string;
  type: ColumnType;
}

export interface VersionRecord {
  number: number;
  hash: string;
  created_by: string;
  created_at: string;
  stale: boolean;
  stale_reason: string | null;
  schema: SchemaColumn[] | null;
  entity: string;
}

export interface DataItem {
  id: string;
  workspace: string;
  name: string;
  description: string;
  kind: "table" | "chart";
  visibility: "public" | "private";
  permalink_token: string;
  versions: VersionRecord[];
  workspace_path?: string;
  row_count?: number;
}

export interface ItemSummary {
  id: string;
  name: string;
  kind: "table" | "chart";
  visibility: "public" | "private";
  versions: number;
  description: string;
}

export interface Workspace {
  id: string;
  name: string;
  parent: string | null;
  path?: string;
}

export interface KeyPair {
  left: string;
  right: string;
}

export interface InferredKey extends KeyPair {
  score: number;
}

export interface MergeRequest {
  inputs: string[];
  keys: KeyPair[][];
  output_columns: string[] | null;
  name: string;
  description?: string;
  workspace?: string | null;
}

export type ChartKind =
  | "bar"
  | "line"
  | "scatter2d"
  | "scatter3d"
  | "heatmap2d"
  | "choropleth";

export interface ChartSpec {
  kind: ChartKind;
  title: string;
  x: string | null;
  y: string | null;
  z: string | null;
  color: string | null;
  region: string | null;
  aggregate: "mean" | "sum" | "count";
  bins: [number, number];
  interpolation: "none" | "linear";
}

export interface ChartRequest {
  spec: ChartSpec;
  name: string;
  description?: string;
  version?: number | null;
  workspace?: string | null;
}

export interface HeatmapData {
  values: (number | null)[][];
  counts: number[][];
  nx: number;
  ny: number;
  x_range: [number, number] | null;
  y_range: [number, number] | null;
  color_domain: [number, number] | null;
}

export interface SeriesPoint {
  x: string;
  y: number | null;
}

export interface ChartDataDoc {
  kind: ChartKind;
  spec: ChartSpec;
  source: { item: string; version: number } | { redacted: true };
  data: {
    series?: SeriesPoint[];
    points?: number[][];
    dropped?: number;
    axes?: Record<string, [number, number] | null>;
    regions?: Record<string, number | null>;
    unmatched?: string[];
  } & Partial<HeatmapData>;
}

export interface LineageNode {
  entity: string;
  item?: string;
  version?: number;
  kind?: string;
  redacted?: boolean;
  attributes?: { name?: string; type?: string; operation?: string; url?: string; note?: string };
  children: LineageNode[];
}

export interface SearchHit {
  item: string;
  score: number;
  snippet: string;
  name: string;
  kind: string;
}

export interface SourceInfo {
  id: string;
  display_name: string;
}

export interface ExternalDataset {
  source: string;
  dataset: string;
  title: string;
  description: string;
  url: string;
}

export interface PropagationEntry {
  item: string;
  status: "regenerated" | "stale" | "skipped" | "planned";
  version: number | null;
  reason: string | null;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
