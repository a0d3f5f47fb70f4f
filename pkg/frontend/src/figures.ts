/** One renderer per figure id, each a pure function of the run directory. */

import * as path from "node:path";
import {
  apeBundle,
  column,
  listTraceFiles,
  NoDataError,
  readTable,
  requireColumns,
  resolveConfigHash,
  thinned,
  weightColumns,
} from "./data.js";
import { optionalColumn } from "./csv.js";
import {
  DEFAULT_MARGINS,
  LinearScale,
  PALETTE,
  axes,
  bandPath,
  document,
  dottedHorizontal,
  extent,
  legend,
  polyline,
} from "./svg.js";
import type { PlotSpec } from "./spec.js";

const W = 560;
const H = 360;
const M = DEFAULT_MARGINS;

function frame(xd: [number, number], yd: [number, number]): [LinearScale, LinearScale] {
  const sx = new LinearScale(xd[0], xd[1], M.left, W - M.right);
  const sy = new LinearScale(yd[0], yd[1], H - M.bottom, M.top);
  return [sx, sy];
}

function meanStdSeries(
  t: number[],
  mean: number[],
  std: number[],
  sx: LinearScale,
  sy: LinearScale,
  color: string,
  shaded: boolean,
): string {
  const idx = thinned(t);
  const ts = idx.map((i) => t[i]);
  const ms = idx.map((i) => mean[i]);
  const parts: string[] = [];
  if (shaded) {
    const upper = idx.map((i) => mean[i] + std[i]);
    const lower = idx.map((i) => mean[i] - std[i]);
    parts.push(`<path d="${bandPath(ts, upper, lower, sx, sy)}" fill="${color}" opacity="0.18"/>`);
  }
  parts.push(`<polyline points="${polyline(ts, ms, sx, sy)}" fill="none" stroke="${color}" stroke-width="1.6"/>`);
  return parts.join("\n");
}

function renderFig5(spec: PlotSpec): string {
  const algorithms = spec.algorithms ?? ["esql", "simple"];
  const bundles = algorithms.map((alg) => ({ name: alg, bundle: apeBundle(spec.run_dir, alg) }));
  const present = bundles.filter((b) => b.bundle.t.length > 0);
  if (present.length === 0) {
    throw new NoDataError("no APE series found");
  }
  const allVals = present.flatMap((b) => b.bundle.mean.filter((v) => !Number.isNaN(v)));
  const [sx, sy] = frame([0, Math.max(...present.map((b) => b.bundle.t.length - 1))], extent([0, ...allVals]));
  const body: string[] = [axes(sx, sy, "iteration", "average policy error", W, H, M)];
  const entries: Array<[string, string]> = [];
  present.forEach((b, i) => {
    const color = PALETTE[i % PALETTE.length];
    body.push(meanStdSeries(b.bundle.t, b.bundle.mean, b.bundle.std, sx, sy, color, b.bundle.seedCount > 1));
    entries.push([`${b.name} (${b.bundle.seedCount} seeds)`, color]);
  });
  body.push(legend(entries, M));
  // data-driven trend annotation on the first algorithm's mean curve
  const main = present[0].bundle;
  const first = main.mean.find((v) => !Number.isNaN(v))!;
  const last = [...main.mean].reverse().find((v) => !Number.isNaN(v))!;
  const trend = last < first ? "decreasing" : "not decreasing";
  body.push(
    `<text x="${W - M.right - 4}" y="${M.top + 12}" font-size="10" text-anchor="end" fill="#555" id="trend-annotation">` +
      `trend: ${trend} (initial ${first.toPrecision(3)}, final ${last.toPrecision(3)})</text>`,
  );
  return document("Policy error vs iterations", resolveConfigHash(spec.run_dir, "summary.json"), body);
}

function renderSweep(spec: PlotSpec, yCol: "ape_mean" | "runtime_s_mean", title: string, yLabel: string): string {
  const file = path.join(spec.run_dir, "size_sweep.csv");
  const table = readTable(file);
  requireColumns(table, ["num_states", "algorithm", yCol], "size_sweep.csv");
  const algIdx = table.header.indexOf("algorithm");
  const algorithms = [...new Set(table.rows.map((r) => r[algIdx]))].sort();
  if (table.rows.length === 0) {
    throw new NoDataError("size_sweep.csv has no data rows");
  }
  const xs = column(table, "num_states");
  const ys = column(table, yCol);
  const [sx, sy] = frame(extent(xs), extent([0, ...ys]));
  const body = [axes(sx, sy, "network size |S|", yLabel, W, H, M)];
  const entries: Array<[string, string]> = [];
  algorithms.forEach((alg, i) => {
    const color = PALETTE[i % PALETTE.length];
    const rows = table.rows
      .map((r, j) => ({ alg: r[algIdx], x: xs[j], y: ys[j] }))
      .filter((r) => r.alg === alg)
      .sort((a, b) => a.x - b.x);
    body.push(
      `<polyline points="${polyline(rows.map((r) => r.x), rows.map((r) => r.y), sx, sy)}" fill="none" stroke="${color}" stroke-width="1.6"/>`,
    );
    rows.forEach((r) =>
      body.push(`<circle cx="${sx.map(r.x).toFixed(2)}" cy="${sy.map(r.y).toFixed(2)}" r="3" fill="${color}"/>`),
    );
    entries.push([alg, color]);
  });
  body.push(legend(entries, M));
  return document(title, resolveConfigHash(spec.run_dir, "summary.json"), body);
}

function renderFig9(spec: PlotSpec): string {
  const table = readTable(path.join(spec.run_dir, "aggregation_sweep.csv"));
  requireColumns(table, ["k", "ape_mean", "reduction_factor"], "aggregation_sweep.csv");
  if (table.rows.length === 0) {
    throw new NoDataError("aggregation_sweep.csv has no data rows");
  }
  const ks = column(table, "k");
  const ape = column(table, "ape_mean");
  const reductionPct = column(table, "reduction_factor").map((f) => (1 - 1 / f) * 100);
  const [sx, syLeft] = frame(extent(ks), extent([0, ...ape]));
  const syRight = new LinearScale(0, 100, H - M.bottom, M.top);
  const order = ks.map((_, i) => i).sort((a, b) => ks[a] - ks[b]);
  const kSorted = order.map((i) => ks[i]);
  const body = [axes(sx, syLeft, "aggregated neighbors k", "average policy error", W, H, M)];
  body.push(
    `<polyline points="${polyline(kSorted, order.map((i) => ape[i]), sx, syLeft)}" fill="none" stroke="${PALETTE[0]}" stroke-width="1.8"/>`,
  );
  body.push(
    `<polyline points="${polyline(kSorted, order.map((i) => reductionPct[i]), sx, syRight)}" fill="none" stroke="${PALETTE[1]}" stroke-width="1.8" stroke-dasharray="5,3"/>`,
  );
  body.push(legend([["policy error", PALETTE[0]], ["memory reduction %", PALETTE[1]]], M));
  return document("Aggregation: error and memory vs k", resolveConfigHash(spec.run_dir, "summary.json"), body);
}

function renderWeights(spec: PlotSpec): string {
  const files = listTraceFiles(spec.run_dir, "esql");
  if (files.length === 0) {
    throw new NoDataError(`no esql traces in ${spec.run_dir}`);
  }
  const table = readTable(files[0]);
  const wCols = weightColumns(table);
  if (wCols.length === 0) {
    throw new NoDataError("trace has no weight columns");
  }
  const t = column(table, "t");
  const series = wCols.map((name) => column(table, name));
  const [sx, sy] = frame([0, t.length - 1], extent([0, ...series.flat()]));
  const body = [axes(sx, sy, "iteration", "environment weight", W, H, M)];
  const entries: Array<[string, string]> = [];
  series.forEach((ys, i) => {
    const idx = thinned(t);
    const color = PALETTE[i % PALETTE.length];
    body.push(
      `<polyline points="${polyline(idx.map((j) => t[j]), idx.map((j) => ys[j]), sx, sy)}" fill="none" stroke="${color}" stroke-width="1.4"/>`,
    );
    entries.push([wCols[i].replace("w_", "environment "), color]);
  });
  body.push(legend(entries, M));
  return document("Fusion weights across iterations", resolveConfigHash(spec.run_dir, "summary.json"), body);
}

function renderDelta(spec: PlotSpec): string {
  const table = readTable(path.join(spec.run_dir, "delta_series.csv"));
  requireColumns(table, ["t", "abs_delta", "bound"], "delta_series.csv");
  if (table.rows.length === 0) {
    throw new NoDataError("delta_series.csv has no data rows");
  }
  const t = column(table, "t");
  const deltas = column(table, "abs_delta");
  const bound = column(table, "bound")[0];
  const [sx, sy] = frame([0, t[t.length - 1]], extent([0, bound, ...deltas]));
  const idx = thinned(t);
  const body = [axes(sx, sy, "iteration", "|fused update|", W, H, M)];
  body.push(
    `<polyline points="${polyline(idx.map((i) => t[i]), idx.map((i) => deltas[i]), sx, sy)}" fill="none" stroke="${PALETTE[0]}" stroke-width="1.2"/>`,
  );
  body.push(dottedHorizontal(bound, "update-magnitude bound", sy, W, M, "#444"));
  return document("Fused update magnitude with bound", resolveConfigHash(spec.run_dir, "bounds_report.json"), body);
}

function renderVariance(spec: PlotSpec): string {
  const table = readTable(path.join(spec.run_dir, "variance_series.csv"));
  requireColumns(table, ["t", "windowed_variance", "strict", "modest", "none"], "variance_series.csv");
  if (table.rows.length === 0) {
    throw new NoDataError("variance_series.csv has no data rows");
  }
  const t = column(table, "t");
  const v = column(table, "windowed_variance");
  const strict = column(table, "strict")[0];
  const modest = column(table, "modest")[0];
  const none = column(table, "none")[0];
  const [sx, sy] = frame(extent(t), extent([0, none, ...v]));
  const body = [axes(sx, sy, "iteration", "windowed error variance", W, H, M)];
  body.push(
    `<polyline points="${polyline(t, v, sx, sy)}" fill="none" stroke="${PALETTE[0]}" stroke-width="1.6"/>`,
  );
  body.push(dottedHorizontal(strict, "strict", sy, W, M, "#2ca02c"));
  body.push(dottedHorizontal(modest, "modest", sy, W, M, "#ff7f0e"));
  body.push(dottedHorizontal(none, "no independence", sy, W, M, "#d62728"));
  return document("Error variance with independence-regime bounds", resolveConfigHash(spec.run_dir, "bounds_report.json"), body);
}

function renderAdc(spec: PlotSpec): string {
  const table = readTable(path.join(spec.run_dir, "adc.csv"));
  requireColumns(table, ["order"], "adc.csv");
  if (table.rows.length === 0) {
    throw new NoDataError("adc.csv has no data rows");
  }
  const orders = table.rows.map((r) => r[0]);
  const matrix = table.rows.map((r) => r.slice(1).map(Number));
  const n = orders.length;
  const cell = Math.min((W - M.left - M.right) / n, (H - M.top - M.bottom) / n);
  const x0 = M.left;
  const y0 = M.top + 10;
  const vals = matrix.flat();
  const vmax = Math.max(0.05, ...vals);
  const body: string[] = [];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const u = Math.min(matrix[i][j] / vmax, 1);
      const shade = Math.round(245 - u * 190);
      body.push(
        `<rect x="${(x0 + j * cell).toFixed(2)}" y="${(y0 + i * cell).toFixed(2)}" width="${cell.toFixed(2)}" height="${cell.toFixed(2)}" fill="rgb(${shade},${Math.round(shade * 0.92)},255)" stroke="#fff"/>`,
      );
      body.push(
        `<text x="${(x0 + j * cell + cell / 2).toFixed(2)}" y="${(y0 + i * cell + cell / 2 + 3).toFixed(2)}" font-size="9" text-anchor="middle" fill="#222">${matrix[i][j].toFixed(2)}</text>`,
      );
    }
    body.push(
      `<text x="${x0 - 6}" y="${(y0 + i * cell + cell / 2 + 3).toFixed(2)}" font-size="10" text-anchor="end" fill="#333">${orders[i]}</text>`,
    );
    body.push(
      `<text x="${(x0 + i * cell + cell / 2).toFixed(2)}" y="${y0 - 6}" font-size="10" text-anchor="middle" fill="#333">${orders[i]}</text>`,
    );
  }
  return document("Averaged distance correlation across environments", resolveConfigHash(spec.run_dir, "bounds_report.json"), body);
}

function renderBellman(spec: PlotSpec): string {
  const table = readTable(path.join(spec.run_dir, "bellman.csv"));
  requireColumns(table, ["order", "bellman_error"], "bellman.csv");
  if (table.rows.length === 0) {
    throw new NoDataError("bellman.csv has no data rows");
  }
  const orders = column(table, "order");
  const errors = column(table, "bellman_error");
  const [sx, sy] = frame(extent(orders), extent([0, ...errors]));
  const body = [axes(sx, sy, "environment order n", "Bellman error (l2)", W, H, M)];
  body.push(
    `<polyline points="${polyline(orders, errors, sx, sy)}" fill="none" stroke="${PALETTE[0]}" stroke-width="1.8"/>`,
  );
  orders.forEach((o, i) =>
    body.push(`<circle cx="${sx.map(o).toFixed(2)}" cy="${sy.map(errors[i]).toFixed(2)}" r="3" fill="${PALETTE[0]}"/>`),
  );
  return document("Bellman error vs environment order", resolveConfigHash(spec.run_dir, "select_envs.json"), body);
}

export const FIGURE_IDS = [
  "fig5",
  "fig6",
  "fig8",
  "fig9",
  "weights",
  "delta",
  "variance",
  "adc",
  "bellman",
] as const;

export function render(spec: PlotSpec): string {
  switch (spec.figure) {
    case "fig5":
      return renderFig5(spec);
    case "fig6":
      return renderSweep(spec, "ape_mean", "Policy error vs network size", "average policy error");
    case "fig8":
      return renderSweep(spec, "runtime_s_mean", "Runtime vs network size", "runtime (s)");
    case "fig9":
      return renderFig9(spec);
    case "weights":
      return renderWeights(spec);
    case "delta":
      return renderDelta(spec);
    case "variance":
      return renderVariance(spec);
    case "adc":
      return renderAdc(spec);
    case "bellman":
      return renderBellman(spec);
    default:
      throw new Error(`unknown figure id '${spec.figure}'`);
  }
}
