// Client-side chart rendering from server-computed data documents.
// Pure helpers (color scale, projection, grid geometry) are separated from
// the canvas painters so they can be unit-tested headlessly.

import type { ChartDataDoc, SeriesPoint } from "./types.js";

/** Blue (low) to red (high), linear in RGB; the heatmap scale. */
export function colorScale(value: number, lo: number, hi: number): string {
  const t = hi === lo ? 0.5 : Math.min(1, Math.max(0, (value - lo) / (hi - lo)));
  const r = Math.round(30 + t * (220 - 30));
  const g = Math.round(60 + (1 - Math.abs(t - 0.5) * 2) * 40);
  const b = Math.round(220 - t * (220 - 40));
  return `rgb(${r},${g},${b})`;
}

export interface Projected {
  x: number;
  y: number;
  depth: number;
}

/** Orthographic projection of unit-cube points after yaw/pitch rotation. */
export function project3d(point: [number, number, number],
                          yaw: number, pitch: number): Projected {
  const [x, y, z] = point;
  const cy = Math.cos(yaw), sy = Math.sin(yaw);
  const cp = Math.cos(pitch), sp = Math.sin(pitch);
  const rx = x * cy + z * sy;
  const rz = -x * sy + z * cy;
  const ry = y * cp - rz * sp;
  const depth = y * sp + rz * cp;
  return { x: rx, y: ry, depth };
}

export function normalize(values: number[]): (v: number) => number {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  return (v: number) => (hi === lo ? 0.5 : (v - lo) / (hi - lo));
}

// ----------------------------------------------------------------------
// canvas painters
// ----------------------------------------------------------------------

export function renderHeatmap(canvas: HTMLCanvasElement, doc: ChartDataDoc): void {
  const ctx = canvas.getContext("2d")!;
  const grid = doc.data.values ?? [];
  const domain = doc.data.color_domain;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!grid.length || !domain) return;
  const ny = grid.length;
  const nx = grid[0].length;
  const cw = canvas.width / nx;
  const ch = canvas.height / ny;
  for (let gy = 0; gy < ny; gy++) {
    for (let gx = 0; gx < nx; gx++) {
      const v = grid[gy][gx];
      if (v === null) continue;  // suppressed/empty cells stay visually distinct
      ctx.fillStyle = colorScale(v, domain[0], domain[1]);
      // row 0 is the lowest y bin: draw from the bottom up
      ctx.fillRect(gx * cw, canvas.height - (gy + 1) * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
}

export function renderSeries(canvas: HTMLCanvasElement, doc: ChartDataDoc,
                             style: "bar" | "line"): void {
  const ctx = canvas.getContext("2d")!;
  const series: SeriesPoint[] = (doc.data.series ?? []).filter((p) => p.y !== null);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!series.length) return;
  const ys = series.map((p) => p.y as number);
  const norm = normalize(ys.concat(0));
  const w = canvas.width / series.length;
  const h = canvas.height - 24;
  ctx.font = "10px sans-serif";
  if (style === "bar") {
    ctx.fillStyle = "#27c";
    series.forEach((p, i) => {
      const barH = norm(p.y as number) * h;
      ctx.fillRect(i * w + 4, h - barH, Math.max(2, w - 8), barH);
    });
  } else {
    ctx.strokeStyle = "#27c";
    ctx.lineWidth = 2;
    ctx.beginPath();
    series.forEach((p, i) => {
      const px = i * w + w / 2;
      const py = h - norm(p.y as number) * h;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#333";
  const every = Math.ceil(series.length / 12);
  series.forEach((p, i) => {
    if (i % every === 0) ctx.fillText(String(p.x).slice(0, 8), i * w + 2, canvas.height - 8);
  });
}

export function renderScatter2d(canvas: HTMLCanvasElement, doc: ChartDataDoc): void {
  const ctx = canvas.getContext("2d")!;
  const points = doc.data.points ?? [];
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!points.length) return;
  const nx = normalize(points.map((p) => p[0]));
  const ny = normalize(points.map((p) => p[1]));
  ctx.fillStyle = "rgba(34,102,204,0.6)";
  for (const p of points) {
    const px = 10 + nx(p[0]) * (canvas.width - 20);
    const py = canvas.height - 10 - ny(p[1]) * (canvas.height - 20);
    ctx.beginPath();
    ctx.arc(px, py, 3, 0, Math.PI * 2);
    ctx.fill();
  }
}

export function renderScatter3d(canvas: HTMLCanvasElement, doc: ChartDataDoc,
                                yaw: number, pitch: number): void {
  const ctx = canvas.getContext("2d")!;
  const points = doc.data.points ?? [];
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!points.length) return;
  const axes = [0, 1, 2].map((i) => normalize(points.map((p) => p[i])));
  const projected = points.map((p) => project3d(
    [axes[0](p[0]) - 0.5, axes[1](p[1]) - 0.5, axes[2](p[2]) - 0.5], yaw, pitch));
  projected.sort((a, b) => a.depth - b.depth);
  const zs = points.map((p) => p[2]);
  const lo = Math.min(...zs), hi = Math.max(...zs);
  projected.forEach((pr, i) => {
    const px = canvas.width / 2 + pr.x * canvas.width * 0.8;
    const py = canvas.height / 2 - pr.y * canvas.height * 0.8;
    ctx.fillStyle = colorScale(points[i][2], lo, hi);
    ctx.globalAlpha = 0.75;
    ctx.beginPath();
    ctx.arc(px, py, 3.5, 0, Math.PI * 2);
    ctx.fill();
  });
  ctx.globalAlpha = 1;
}

/** Choropleth shown as a ranked color-scaled list (no bundled topology). */
export function choroplethRows(doc: ChartDataDoc): { code: string; value: number; color: string }[] {
  const regions = doc.data.regions ?? {};
  const entries = Object.entries(regions).filter(([, v]) => v !== null) as [string, number][];
  if (!entries.length) return [];
  const values = entries.map(([, v]) => v);
  const lo = Math.min(...values), hi = Math.max(...values);
  return entries
    .sort((a, b) => b[1] - a[1])
    .map(([code, value]) => ({ code, value, color: colorScale(value, lo, hi) }));
}
