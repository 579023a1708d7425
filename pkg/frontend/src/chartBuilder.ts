// Chart builder state: kind picker, column bindings constrained by the
// source table's column types (impossible bindings never reach the menu),
// and the chart-spec wire form.

import type { ChartKind, ChartRequest, ChartSpec, ColumnType, SchemaColumn } from "./types.js";

export type Binding = "x" | "y" | "z" | "color" | "region";

const NUMERICAL: ColumnType[] = ["Numerical"];

const BINDING_RULES: Record<ChartKind, Partial<Record<Binding, ColumnType[] | null>>> = {
  bar: { x: null, y: NUMERICAL },                      // null = any column type
  line: { x: ["Temporal", "Numerical"], y: NUMERICAL },
  scatter2d: { x: NUMERICAL, y: NUMERICAL },
  scatter3d: { x: NUMERICAL, y: NUMERICAL, z: NUMERICAL },
  heatmap2d: { x: NUMERICAL, y: NUMERICAL, color: NUMERICAL },
  choropleth: { region: ["Location"], color: NUMERICAL },
};

export const CHART_KINDS = Object.keys(BINDING_RULES) as ChartKind[];

export class ChartBuilder {
  schema: SchemaColumn[];
  kind: ChartKind = "bar";
  bindings: Partial<Record<Binding, string>> = {};
  title = "";
  name = "";
  description = "";
  aggregate: "mean" | "sum" | "count" = "mean";
  bins: [number, number] = [50, 50];
  interpolation: "none" | "linear" = "linear";

  constructor(schema: SchemaColumn[]) {
    this.schema = schema;
  }

  setKind(kind: ChartKind): void {
    this.kind = kind;
    this.bindings = {};
  }

  requiredBindings(): Binding[] {
    return Object.keys(BINDING_RULES[this.kind]) as Binding[];
  }

  /** Columns offered in the drop-down for a binding; others are disabled. */
  allowedColumns(binding: Binding): string[] {
    const rule = BINDING_RULES[this.kind][binding];
    if (rule === undefined) return [];
    return this.schema
      .filter((c) => rule === null || rule.includes(c.type))
      .map((c) => c.name);
  }

  bind(binding: Binding, column: string): void {
    if (!this.allowedColumns(binding).includes(column)) {
      throw new Error(`column ${column} cannot be bound to ${binding} for ${this.kind}`);
    }
    this.bindings[binding] = column;
  }

  get submittable(): boolean {
    return this.name.trim().length > 0 &&
      this.requiredBindings().every((b) => this.bindings[b]);
  }

  specWire(): ChartSpec {
    return {
      kind: this.kind,
      title: this.title || this.name,
      x: this.bindings.x ?? null,
      y: this.bindings.y ?? null,
      z: this.bindings.z ?? null,
      color: this.bindings.color ?? null,
      region: this.bindings.region ?? null,
      aggregate: this.aggregate,
      bins: [...this.bins],
      interpolation: this.interpolation,
    };
  }

  request(): ChartRequest {
    if (!this.submittable) throw new Error("chart builder is not submittable");
    return { spec: this.specWire(), name: this.name, description: this.description };
  }
}
