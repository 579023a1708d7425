// Contract: the merge wizard prefills the server's key inference, predicts
// the server's output schema (suffix rule included), and submits the
// documented MergePlan wire form.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { joinHeaders, MergeWizard } from "../src/merge.js";
import type { DataItem, InferredKey, MergeRequest } from "../src/types.js";
import { fixture, recordingFetch } from "./helpers.js";

const income = fixture<DataItem>("item_income.json");
const education = fixture<DataItem>("item_education.json");
const health = fixture<DataItem>("item_health.json");
const merged = fixture<DataItem>("merge2_response.json");
const inferred = fixture<InferredKey[]>("infer_keys.json");
const merge1Request = fixture<MergeRequest>("merge1_request.json");

describe("merge wizard", () => {
  it("prefills key pairs from the infer-keys response", () => {
    const wizard = new MergeWizard([income, education]);
    wizard.prefill(0, inferred);
    expect(wizard.keySteps[0].pairs).toEqual([{ left: "FIPS", right: "FIPS" }]);
  });

  it("supports add and remove controls on the pair list", () => {
    const wizard = new MergeWizard([income, education]);
    wizard.prefill(0, inferred);
    wizard.addPair(0, "County", "Percent_Bachelors_Or_Higher");
    expect(wizard.keySteps[0].pairs).toHaveLength(2);
    wizard.removePair(0, 1);
    expect(wizard.keySteps[0].pairs).toEqual([{ left: "FIPS", right: "FIPS" }]);
    expect(() => wizard.addPair(0, "Ghost", "FIPS")).toThrow();
  });

  it("builds the recorded two-table merge request", () => {
    const wizard = new MergeWizard([income, education]);
    wizard.prefill(0, inferred);
    wizard.name = "Income and Education";
    const plan = wizard.plan();
    expect(plan.inputs).toEqual(merge1Request.inputs);
    expect(plan.keys).toEqual(merge1Request.keys);
    expect(plan.output_columns).toEqual(merge1Request.output_columns);
    expect(plan.name).toBe(merge1Request.name);
  });

  it("predicts the server's suffixed output schema", () => {
    // pinned against the schema the server actually produced for merge 2
    const twoWay = joinHeaders(
      ["FIPS", "County", "Median_Household_Income"],
      ["FIPS", "Percent_Bachelors_Or_Higher"]);
    const threeWay = joinHeaders(twoWay, ["FIPS", "Death_Rate"]);
    const serverSchema = merged.versions[merged.versions.length - 1].schema!
      .map((c) => c.name);
    expect(threeWay).toEqual(serverSchema);
  });

  it("a three-table plan has two key steps then one column step", () => {
    const wizard = new MergeWizard([income, education, health]);
    expect(wizard.stepCount).toBe(3);
    expect(wizard.keySteps).toHaveLength(2);
    wizard.prefill(0, inferred);
    expect(wizard.onColumnStep).toBe(false);
    wizard.next();
    wizard.next();
    expect(wizard.onColumnStep).toBe(true);
    // second step joins the suffixed accumulator against the third table
    expect(wizard.keySteps[1].leftColumns).toContain("FIPS_x");
    expect(wizard.keySteps[1].rightColumns).toContain("FIPS");
  });

  it("deselecting every output column disables submission", () => {
    const wizard = new MergeWizard([income, education]);
    wizard.prefill(0, inferred);
    wizard.name = "M";
    expect(wizard.submittable).toBe(true);
    for (const col of wizard.outputColumns()) wizard.toggleColumn(col);
    expect(wizard.selectedColumns.size).toBe(0);
    expect(wizard.submittable).toBe(false);
    expect(() => wizard.plan()).toThrow();
  });

  it("an explicit column selection travels in output_columns", () => {
    const wizard = new MergeWizard([income, education]);
    wizard.prefill(0, inferred);
    wizard.name = "M";
    for (const col of wizard.outputColumns()) {
      if (col !== "FIPS_x" && col !== "Median_Household_Income") wizard.toggleColumn(col);
    }
    expect(wizard.plan().output_columns).toEqual(["FIPS_x", "Median_Household_Income"]);
  });

  it("submits through the documented endpoint", async () => {
    const { impl, calls } = recordingFetch([{ body: merged }]);
    const api = new ApiClient("http://lake", "tok", impl);
    const wizard = new MergeWizard([income, education]);
    wizard.prefill(0, inferred);
    wizard.name = "Income and Education";
    await api.merge(wizard.plan());
    expect(calls[0].url).toBe("http://lake/ops/merge");
    expect(calls[0].body).toMatchObject({
      inputs: merge1Request.inputs,
      keys: merge1Request.keys,
      name: "Income and Education",
    });
  });

  it("infer-keys round trip uses the documented endpoint", async () => {
    const { impl, calls } = recordingFetch([{ body: inferred }]);
    const api = new ApiClient("http://lake", "tok", impl);
    const result = await api.inferKeys(income.id, education.id);
    expect(calls[0].url).toBe("http://lake/ops/merge:infer-keys");
    expect(calls[0].body).toEqual({ left: income.id, right: education.id });
    expect(result[0].score).toBe(1.0);
  });
});
