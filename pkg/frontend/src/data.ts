/** Loaders over the experiment CLI's documented output layout. */

import * as fs from "node:fs";
import * as path from "node:path";
import { parseCsv, requireColumns, optionalColumn, column, Table } from "./csv.js";

export class NoDataError extends Error {}

export interface SeriesBundle {
  t: number[];
  mean: number[];
  std: number[];
  seedCount: number;
}

export function listTraceFiles(runDir: string, algorithm: string): string[] {
  if (!fs.existsSync(runDir)) {
    throw new NoDataError(`run directory not found: ${runDir}`);
  }
  const pattern = new RegExp(`^trace_${algorithm}_seed(\\d+)\\.csv$`);
  const files = fs
    .readdirSync(runDir)
    .filter((name) => pattern.test(name))
    .sort((a, b) => {
      const na = Number(a.match(pattern)![1]);
      const nb = Number(b.match(pattern)![1]);
      return na - nb;
    });
  return files.map((name) => path.join(runDir, name));
}

export function readTable(filePath: string): Table {
  if (!fs.existsSync(filePath)) {
    throw new NoDataError(`input file not found: ${filePath}`);
  }
  return parseCsv(fs.readFileSync(filePath, "utf-8"));
}

/** Mean and standard deviation of the ape column across seed traces. */
export function apeBundle(runDir: string, algorithm: string): SeriesBundle {
  const files = listTraceFiles(runDir, algorithm);
  if (files.length === 0) {
    throw new NoDataError(`no trace files for algorithm '${algorithm}' in ${runDir}`);
  }
  const series: number[][] = [];
  for (const file of files) {
    const table = readTable(file);
    requireColumns(table, ["t", "ape"], path.basename(file));
    const ape = optionalColumn(table, "ape");
    if (ape.every((v) => Number.isNaN(v))) {
      throw new NoDataError(`${path.basename(file)}: ape column is empty (no oracle policy)`);
    }
    series.push(ape);
  }
  const len = Math.min(...series.map((s) => s.length));
  const t = Array.from({ length: len }, (_, i) => i);
  const mean: number[] = [];
  const std: number[] = [];
  for (let i = 0; i < len; i++) {
    const vals = series.map((s) => s[i]).filter((v) => !Number.isNaN(v));
    if (vals.length === 0) {
      mean.push(NaN);
      std.push(NaN);
      continue;
    }
    const m = vals.reduce((a, b) => a + b, 0) / vals.length;
    const v = vals.reduce((a, b) => a + (b - m) * (b - m), 0) / vals.length;
    mean.push(m);
    std.push(Math.sqrt(v));
  }
  return { t, mean, std, seedCount: files.length };
}

export function weightColumns(table: Table): string[] {
  return table.header.filter((name) => /^w_\d+$/.test(name));
}

/** Config hash for provenance: summary first, then analysis reports. */
export function resolveConfigHash(runDir: string, preferred?: string): string {
  const candidates = preferred
    ? [preferred]
    : ["summary.json", "bounds_report.json", "select_envs.json"];
  for (const name of candidates) {
    const file = path.join(runDir, name);
    if (fs.existsSync(file)) {
      const doc = JSON.parse(fs.readFileSync(file, "utf-8"));
      if (typeof doc.config_hash === "string" && doc.config_hash.length > 0) {
        return doc.config_hash;
      }
    }
  }
  throw new NoDataError(`no config hash found in ${runDir}`);
}

export function thinned(xs: number[], maxPoints = 1200): number[] {
  if (xs.length <= maxPoints) {
    return xs.map((_, i) => i);
  }
  const stride = Math.ceil(xs.length / maxPoints);
  const idx: number[] = [];
  for (let i = 0; i < xs.length; i += stride) {
    idx.push(i);
  }
  if (idx[idx.length - 1] !== xs.length - 1) {
    idx.push(xs.length - 1);
  }
  return idx;
}

export { column, requireColumns };
