// Contract: the provenance view renders the recorded 6-node walkthrough
// tree with lineage edges, attribute boxes, and lock stubs for redactions.

import { describe, expect, it } from "vitest";

import { countNodes, layoutTree, treeToSvg } from "../src/provenance.js";
import type { LineageNode } from "../src/types.js";
import { fixture } from "./helpers.js";

const tree = fixture<LineageNode>("lineage_heatmap.json");

describe("provenance view", () => {
  it("lays out the 6-node fixture tree", () => {
    expect(countNodes(tree)).toBe(6);
    const layout = layoutTree(tree);
    expect(layout.nodes).toHaveLength(6);
    expect(layout.edges).toHaveLength(5);
  });

  it("keeps parents above their children and centers them", () => {
    const layout = layoutTree(tree);
    const byId = new Map(layout.nodes.map((n) => [n.id, n]));
    for (const e of layout.edges) {
      expect(byId.get(e.from)!.y).toBeLessThan(byId.get(e.to)!.y);
    }
    const root = layout.nodes.find((n) => n.label === "IMR heat map")!;
    expect(root.y).toBeLessThan(Math.min(...layout.nodes
      .filter((n) => n !== root).map((n) => n.y)));
  });

  it("renders every entity with its attribute box into the SVG", () => {
    const svg = treeToSvg(layoutTree(tree));
    expect(svg.match(/class="prov-node/g)).toHaveLength(6);
    expect(svg.match(/class="lineage-edge"/g)).toHaveLength(5);
    expect(svg.match(/class="attr-edge"/g)).toHaveLength(6);  // dotted attribute edges
    expect(svg).toContain('stroke-dasharray="3,3"');
    for (const name of ["IMR heat map", "County Analysis", "Income and Education",
                        "ACS Income", "ACS Education", "CDC Infant Mortality"]) {
      expect(svg).toContain(name.slice(0, 20));
    }
    expect(svg).toContain("table · merge");
    expect(svg).toContain("chart · chart");
    expect(svg).toContain("table · ingest");
  });

  it("nodes carry their item ids so clicks can navigate", () => {
    const svg = treeToSvg(layoutTree(tree));
    const walk = (n: LineageNode): string[] =>
      [n.item!, ...n.children.flatMap(walk)];
    for (const itemId of walk(tree)) {
      expect(svg).toContain(`data-item="${itemId}"`);
    }
  });

  it("renders redacted stubs as locked nodes without metadata", () => {
    const redacted: LineageNode = {
      entity: "en-root", item: "it-open", version: 1, kind: "table",
      attributes: { name: "Open Result", type: "table", operation: "filter" },
      children: [{ entity: "en-hidden", redacted: true, children: [] }],
    };
    const layout = layoutTree(redacted);
    const stub = layout.nodes.find((n) => n.id === "en-hidden")!;
    expect(stub.redacted).toBe(true);
    expect(stub.item).toBeNull();
    const svg = treeToSvg(layout);
    expect(svg).toContain("locked");
    expect(svg).not.toContain("en-hidden\" data-item");
  });
});
