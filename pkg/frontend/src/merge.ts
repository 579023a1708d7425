// Merge wizard: one key step per adjacent input pair (prefilled from the
// infer-keys endpoint, with add/remove controls), then one column-selection
// step over the predicted output schema. The suffix rule here mirrors the
// server's: a name on both sides of a join is kept twice as name_x / name_y.

import type {
  DataItem,
  InferredKey,
  KeyPair,
  MergeRequest,
  SchemaColumn,
} from "./types.js";

export interface KeyStep {
  leftColumns: string[];
  rightColumns: string[];
  pairs: KeyPair[];
}

export function joinHeaders(left: string[], right: string[]): string[] {
  const shared = new Set(left.filter((h) => right.includes(h)));
  return [
    ...left.map((h) => (shared.has(h) ? `${h}_x` : h)),
    ...right.map((h) => (shared.has(h) ? `${h}_y` : h)),
  ];
}

function schemaNames(item: DataItem): string[] {
  const latest = item.versions[item.versions.length - 1];
  return (latest.schema ?? []).map((c: SchemaColumn) => c.name);
}

export class MergeWizard {
  items: DataItem[];
  keySteps: KeyStep[];
  selectedColumns: Set<string>;
  name = "";
  description = "";
  private step = 0;

  constructor(items: DataItem[]) {
    if (items.length < 2) throw new Error("merge needs at least two items");
    if (items.some((i) => i.kind !== "table")) throw new Error("merge inputs must be tables");
    this.items = items;
    this.keySteps = [];
    let acc = schemaNames(items[0]);
    for (const right of items.slice(1)) {
      const rightCols = schemaNames(right);
      this.keySteps.push({ leftColumns: acc, rightColumns: rightCols, pairs: [] });
      acc = joinHeaders(acc, rightCols);
    }
    this.selectedColumns = new Set(acc);
  }

  /** Key steps for each adjacent pair, then the column-selection step. */
  get stepCount(): number {
    return this.keySteps.length + 1;
  }

  get currentStep(): number {
    return this.step;
  }

  next(): void {
    if (this.step >= this.stepCount - 1) throw new Error("already on the last step");
    this.step += 1;
  }

  back(): void {
    if (this.step > 0) this.step -= 1;
  }

  get onColumnStep(): boolean {
    return this.step === this.stepCount - 1;
  }

  prefill(stepIndex: number, inferred: InferredKey[]): void {
    const step = this.keySteps[stepIndex];
    step.pairs = inferred
      .filter((k) => k.score === 1.0)
      .filter((k) => step.leftColumns.includes(k.left) && step.rightColumns.includes(k.right))
      .map((k) => ({ left: k.left, right: k.right }));
    if (step.pairs.length === 0 && inferred.length > 0) {
      const best = inferred[0];
      if (step.leftColumns.includes(best.left) && step.rightColumns.includes(best.right)) {
        step.pairs = [{ left: best.left, right: best.right }];
      }
    }
  }

  addPair(stepIndex: number, left: string, right: string): void {
    const step = this.keySteps[stepIndex];
    if (!step.leftColumns.includes(left)) throw new Error(`no left column ${left}`);
    if (!step.rightColumns.includes(right)) throw new Error(`no right column ${right}`);
    if (!step.pairs.some((p) => p.left === left && p.right === right)) {
      step.pairs.push({ left, right });
    }
  }

  removePair(stepIndex: number, index: number): void {
    this.keySteps[stepIndex].pairs.splice(index, 1);
  }

  /** Predicted output schema of the whole left-to-right join chain. */
  outputColumns(): string[] {
    let acc = schemaNames(this.items[0]);
    for (const right of this.items.slice(1)) {
      acc = joinHeaders(acc, schemaNames(right));
    }
    return acc;
  }

  toggleColumn(name: string): void {
    if (this.selectedColumns.has(name)) this.selectedColumns.delete(name);
    else if (this.outputColumns().includes(name)) this.selectedColumns.add(name);
  }

  get submittable(): boolean {
    return this.name.trim().length > 0 &&
      this.selectedColumns.size > 0 &&
      this.keySteps.every((s) => s.pairs.length > 0);
  }

  plan(): MergeRequest {
    if (!this.submittable) throw new Error("wizard is not submittable");
    const all = this.outputColumns();
    const keepAll = all.every((c) => this.selectedColumns.has(c));
    return {
      inputs: this.items.map((i) => i.id),
      keys: this.keySteps.map((s) => s.pairs.map((p) => ({ ...p }))),
      output_columns: keepAll ? null : all.filter((c) => this.selectedColumns.has(c)),
      name: this.name,
      description: this.description,
    };
  }
}
