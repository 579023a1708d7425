// Upload wizard state: review the inferred schema, correct types from the
// per-column drop-down, and build the approval payload. DOM-free so the
// contract tests can drive it directly.

import type { ColumnType, SchemaProposal, StagedUpload } from "./types.js";
import { COLUMN_TYPES } from "./types.js";

export interface ColumnRow {
  name: string;
  inferred: ColumnType;
  chosen: ColumnType;
  confidence: number;
  samples: string[];
  error: string | null;
}

export class UploadWizard {
  stagedId: string;
  warnings: string[];
  rows: ColumnRow[];
  formError: string | null = null;

  constructor(staged: StagedUpload) {
    this.stagedId = staged.id;
    this.warnings = staged.warnings ?? [];
    this.rows = staged.proposal.columns.map((c) => ({
      name: c.name,
      inferred: c.inferred_type,
      chosen: c.inferred_type,
      confidence: c.confidence,
      samples: c.samples,
      error: null,
    }));
  }

  typeOptions(): ColumnType[] {
    return COLUMN_TYPES;
  }

  setType(column: string, type: ColumnType): void {
    const row = this.rows.find((r) => r.name === column);
    if (!row) throw new Error(`no column ${column}`);
    row.chosen = type;
    row.error = null;
  }

  /** Only deliberate changes travel in the approval body. */
  corrections(): Record<string, string> {
    const out: Record<string, string> = {};
    for (const row of this.rows) {
      if (row.chosen !== row.inferred) out[row.name] = row.chosen;
    }
    return out;
  }

  approvalBody(): { corrections: Record<string, string> } {
    return { corrections: this.corrections() };
  }

  /** Route a server rejection to the offending column, or the form. */
  applyApiError(code: string, message: string): void {
    if (code === "unknown-column" || code === "type-mismatch") {
      const match = this.rows.find((r) => message.includes(r.name));
      if (match) {
        match.error = message;
        return;
      }
    }
    this.formError = `${code}: ${message}`;
  }

  /** State survives a rejection so the user can fix and resubmit. */
  get submittable(): boolean {
    return this.rows.length > 0;
  }
}

export function describeProposal(proposal: SchemaProposal): string[] {
  return proposal.columns.map(
    (c) => `${c.name}: ${c.inferred_type} (${Math.round(c.confidence * 100)}%)`);
}
