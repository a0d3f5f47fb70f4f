/** Plot specification: which figure, which run directory, where to write. */

import * as fs from "node:fs";

export const VALID_FIGURES = [
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

export type FigureId = (typeof VALID_FIGURES)[number];

export interface PlotSpec {
  figure: FigureId;
  run_dir: string;
  output: string;
  algorithms?: string[];
}

export class SpecError extends Error {}

export function parseSpec(doc: unknown): PlotSpec {
  if (typeof doc !== "object" || doc === null) {
    throw new SpecError("plot spec must be a JSON object");
  }
  const rec = doc as Record<string, unknown>;
  const figure = rec.figure;
  if (typeof figure !== "string" || !(VALID_FIGURES as readonly string[]).includes(figure)) {
    throw new SpecError(`figure must be one of ${VALID_FIGURES.join(", ")}`);
  }
  if (typeof rec.run_dir !== "string" || rec.run_dir.length === 0) {
    throw new SpecError("run_dir must be a non-empty string");
  }
  if (typeof rec.output !== "string" || rec.output.length === 0) {
    throw new SpecError("output must be a non-empty string");
  }
  let algorithms: string[] | undefined;
  if (rec.algorithms !== undefined) {
    if (!Array.isArray(rec.algorithms) || rec.algorithms.some((a) => typeof a !== "string")) {
      throw new SpecError("algorithms must be a list of strings");
    }
    algorithms = rec.algorithms as string[];
  }
  const known = new Set(["figure", "run_dir", "output", "algorithms"]);
  for (const key of Object.keys(rec)) {
    if (!known.has(key)) {
      throw new SpecError(`unknown plot spec key '${key}'`);
    }
  }
  return { figure: figure as FigureId, run_dir: rec.run_dir, output: rec.output, algorithms };
}

export function loadSpec(path: string): PlotSpec {
  if (!fs.existsSync(path)) {
    throw new SpecError(`spec file not found: ${path}`);
  }
  return parseSpec(JSON.parse(fs.readFileSync(path, "utf-8")));
}
