/**
 * Deterministic SVG renderers for the sweep figures: pure functions of the
 * parsed CSV rows (fixed palette and layout, no timestamps), one polyline
 * per solver, axis labels carrying units.
 */

import { SweepRow, SchemaError } from "./schema.js";

export type FigureKind =
  | "ee_vs_power"
  | "convergence"
  | "ee_vs_pout"
  | "ee_vs_variance"
  | "ee_vs_rsus"
  | "sumrate_vs_rsus";

export const FIGURE_KINDS: FigureKind[] = [
  "ee_vs_power",
  "convergence",
  "ee_vs_pout",
  "ee_vs_variance",
  "ee_vs_rsus",
  "sumrate_vs_rsus",
];

interface FigureConfig {
  axes: string[];
  xLabel: string;
  yField: "mean_ee_bits_per_joule" | "mean_sumrate_bps";
  yLabel: string;
  integerX?: boolean;
  markArgmax?: boolean;
}

const FIGURES: Record<FigureKind, FigureConfig> = {
  ee_vs_power: {
    axes: ["rsu_power_dbm"],
    xLabel: "RSU transmit power (dBm)",
    yField: "mean_ee_bits_per_joule",
    yLabel: "energy efficiency (bit/joule)",
    markArgmax: true,
  },
  convergence: {
    axes: ["dinkelbach_iteration"],
    xLabel: "iteration",
    yField: "mean_ee_bits_per_joule",
    yLabel: "energy efficiency (bit/joule)",
    integerX: true,
  },
  ee_vs_pout: {
    axes: ["p_out"],
    xLabel: "outage probability budget",
    yField: "mean_ee_bits_per_joule",
    yLabel: "energy efficiency (bit/joule)",
  },
  ee_vs_variance: {
    axes: ["sigma2_rsu", "sigma2_bs"],
    xLabel: "channel estimation error variance",
    yField: "mean_ee_bits_per_joule",
    yLabel: "energy efficiency (bit/joule)",
  },
  ee_vs_rsus: {
    axes: ["num_rsus"],
    xLabel: "number of RSUs",
    yField: "mean_ee_bits_per_joule",
    yLabel: "energy efficiency (bit/joule)",
    integerX: true,
  },
  sumrate_vs_rsus: {
    axes: ["num_rsus"],
    xLabel: "number of RSUs",
    yField: "mean_sumrate_bps",
    yLabel: "sum rate (bit/s)",
    integerX: true,
  },
};

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 24, right: 180, bottom: 56, left: 88 };

interface Series {
  solver: string;
  points: { x: number; y: number }[];
}

function groupSeries(rows: SweepRow[], cfg: FigureConfig, kind: string): Series[] {
  const matching = rows.filter((r) => cfg.axes.includes(r.axis_name));
  if (matching.length === 0) {
    const seen = [...new Set(rows.map((r) => r.axis_name))].join(", ") || "none";
    throw new SchemaError(
      `figure '${kind}' needs rows with axis_name in {${cfg.axes.join(", ")}}; CSV has: ${seen}`,
    );
  }
  const bySolver = new Map<string, { x: number; y: number }[]>();
  for (const row of matching) {
    const y = row[cfg.yField];
    if (Number.isNaN(y)) continue;
    if (!bySolver.has(row.solver)) bySolver.set(row.solver, []);
    bySolver.get(row.solver)!.push({ x: row.axis_value, y });
  }
  const solvers = [...bySolver.keys()].sort();
  return solvers.map((solver) => ({
    solver,
    points: bySolver.get(solver)!.slice().sort((a, b) => a.x - b.x),
  }));
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (lo === hi) {
    return [lo];
  }
  const span = hi - lo;
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function integerTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  const step = Math.max(1, Math.ceil((hi - lo) / 10));
  for (let v = Math.ceil(lo); v <= hi; v += step) ticks.push(v);
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(2);
  return String(Number(v.toPrecision(6)));
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

/** Render one figure kind from validated sweep rows into SVG markup. */
export function renderFigure(kind: FigureKind, rows: SweepRow[]): string {
  const cfg = FIGURES[kind];
  if (!cfg) {
    throw new SchemaError(
      `unknown figure kind '${kind}'; expected one of ${FIGURE_KINDS.join(", ")}`,
    );
  }
  const series = groupSeries(rows, cfg, kind);
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  if (xs.length === 0) {
    throw new SchemaError(`figure '${kind}': no finite data points to draw`);
  }
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (xLo === xHi) {
    xLo -= 0.5;
    xHi += 0.5;
  }
  if (yLo === yHi) {
    yLo -= Math.abs(yLo) * 0.05 + 1;
    yHi += Math.abs(yHi) * 0.05 + 1;
  } else {
    const pad = 0.06 * (yHi - yLo);
    yLo -= pad;
    yHi += pad;
  }
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const xTicks = cfg.integerX ? integerTicks(xLo, xHi) : niceTicks(xLo, xHi);
  const yTicks = niceTicks(yLo, yHi);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  // frame
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`,
  );
  // grid + ticks
  for (const t of xTicks) {
    const x = sx(t);
    parts.push(
      `<line x1="${x.toFixed(2)}" y1="${MARGIN.top}" x2="${x.toFixed(2)}" y2="${MARGIN.top + plotH}" stroke="#eee"/>`,
    );
    parts.push(
      `<text class="x-tick" x="${x.toFixed(2)}" y="${MARGIN.top + plotH + 18}" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y.toFixed(2)}" x2="${MARGIN.left + plotW}" y2="${y.toFixed(2)}" stroke="#eee"/>`,
    );
    parts.push(
      `<text class="y-tick" x="${MARGIN.left - 6}" y="${(y + 4).toFixed(2)}" text-anchor="end">${fmt(t)}</text>`,
    );
  }
  // axis labels (units included)
  parts.push(
    `<text class="axis-label" x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" text-anchor="middle">${esc(cfg.xLabel)}</text>`,
  );
  parts.push(
    `<text class="axis-label" x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${esc(cfg.yLabel)}</text>`,
  );
  // series
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const path = s.points
      .map((p, j) => `${j === 0 ? "M" : "L"}${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`)
      .join(" ");
    parts.push(
      `<path class="series" data-solver="${esc(s.solver)}" d="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
    for (const p of s.points) {
      parts.push(
        `<circle class="point" cx="${sx(p.x).toFixed(2)}" cy="${sy(p.y).toFixed(2)}" r="2.6" fill="${color}"/>`,
      );
    }
    if (cfg.markArgmax && s.points.length > 0) {
      const best = s.points.reduce((a, b) => (b.y > a.y ? b : a));
      parts.push(
        `<circle class="argmax" cx="${sx(best.x).toFixed(2)}" cy="${sy(best.y).toFixed(2)}" r="6" fill="none" stroke="${color}" stroke-width="1.8"/>`,
      );
    }
  });
  // legend
  const lx = MARGIN.left + plotW + 12;
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const y = MARGIN.top + 14 + i * 20;
    parts.push(
      `<line x1="${lx}" y1="${y - 4}" x2="${lx + 22}" y2="${y - 4}" stroke="${color}" stroke-width="1.8"/>`,
    );
    parts.push(
      `<text class="legend-entry" x="${lx + 28}" y="${y}">${esc(s.solver)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
