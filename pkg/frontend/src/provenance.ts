// Lineage tree layout and SVG rendering: solid edges between entities,
// dotted edges to the attribute boxes (name, type, operation). Redacted
// stubs render as locked nodes with no metadata.

import type { LineageNode } from "./types.js";

export interface LaidOutNode {
  id: string;
  x: number;
  y: number;
  label: string;
  typeLine: string;      // "type · operation" for the attribute box
  redacted: boolean;
  externalSource: boolean;
  item: string | null;
}

export interface LaidOutEdge {
  from: string;
  to: string;
}

export interface TreeLayout {
  nodes: LaidOutNode[];
  edges: LaidOutEdge[];
  width: number;
  height: number;
}

const X_GAP = 180;
const Y_GAP = 110;
const MARGIN = 60;

export function layoutTree(root: LineageNode): TreeLayout {
  const nodes: LaidOutNode[] = [];
  const edges: LaidOutEdge[] = [];
  let nextLeafSlot = 0;
  let maxDepth = 0;

  function place(node: LineageNode, depth: number): number {
    maxDepth = Math.max(maxDepth, depth);
    let x: number;
    if (node.children.length === 0) {
      x = nextLeafSlot++;
    } else {
      const childXs = node.children.map((c) => {
        const cx = place(c, depth + 1);
        edges.push({ from: node.entity, to: c.entity });
        return cx;
      });
      x = (Math.min(...childXs) + Math.max(...childXs)) / 2;
    }
    if (node.redacted) {
      nodes.push({
        id: node.entity, x, y: depth, label: "locked", typeLine: "",
        redacted: true, externalSource: false, item: null,
      });
    } else if (node.kind === "external-source") {
      const src = node.attributes?.url || node.attributes?.note || "external source";
      nodes.push({
        id: node.entity, x, y: depth, label: src, typeLine: "external-source",
        redacted: false, externalSource: true, item: null,
      });
    } else {
      nodes.push({
        id: node.entity, x, y: depth,
        label: node.attributes?.name ?? node.entity,
        typeLine: `${node.attributes?.type ?? "?"} · ${node.attributes?.operation ?? "?"}`,
        redacted: false, externalSource: false, item: node.item ?? null,
      });
    }
    return x;
  }

  place(root, 0);
  for (const n of nodes) {
    n.x = MARGIN + n.x * X_GAP + X_GAP / 2;
    n.y = MARGIN + n.y * Y_GAP;
  }
  return {
    nodes,
    edges,
    width: MARGIN * 2 + Math.max(1, nextLeafSlot) * X_GAP,
    height: MARGIN * 2 + (maxDepth + 1) * Y_GAP,
  };
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function treeToSvg(layout: TreeLayout): string {
  const byId = new Map(layout.nodes.map((n) => [n.id, n]));
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${layout.width} ${layout.height}" ` +
    `width="${layout.width}" height="${layout.height}" class="prov-tree">`,
  ];
  for (const e of layout.edges) {
    const a = byId.get(e.from)!;
    const b = byId.get(e.to)!;
    parts.push(
      `<line class="lineage-edge" x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" ` +
      `stroke="#444" stroke-width="1.5"/>`);
  }
  for (const n of layout.nodes) {
    const boxX = n.x + 16;
    const boxY = n.y - 20;
    parts.push(`<g class="prov-node${n.redacted ? " redacted" : ""}" data-entity="${esc(n.id)}"` +
      (n.item ? ` data-item="${esc(n.item)}"` : "") + `>`);
    parts.push(
      `<circle cx="${n.x}" cy="${n.y}" r="7" fill="${n.redacted ? "#999" : n.externalSource ? "#7a5" : "#27c"}"/>`);
    // dotted attribute edge + white attribute box
    parts.push(
      `<line class="attr-edge" x1="${n.x + 7}" y1="${n.y}" x2="${boxX}" y2="${boxY + 18}" ` +
      `stroke="#888" stroke-dasharray="3,3"/>`);
    parts.push(`<rect x="${boxX}" y="${boxY}" rx="4" width="150" height="38" ` +
      `fill="white" stroke="#bbb"/>`);
    parts.push(`<text x="${boxX + 6}" y="${boxY + 15}" font-size="11" font-weight="600">` +
      `${n.redacted ? "\u{1F512} locked" : esc(truncate(n.label, 24))}</text>`);
    parts.push(`<text x="${boxX + 6}" y="${boxY + 30}" font-size="10" fill="#666">` +
      `${esc(n.typeLine)}</text>`);
    parts.push("</g>");
  }
  parts.push("</svg>");
  return parts.join("");
}

function truncate(s: string, n: number): string {
  return s.length > n ? `${s.slice(0, n - 1)}…` : s;
}

export function countNodes(root: LineageNode): number {
  return 1 + root.children.reduce((acc, c) => acc + countNodes(c), 0);
}
