/** Hand-rolled SVG plotting: scales, polylines, shaded bands, heatmap cells.
 *
 * Rendering is a pure function of the numeric inputs, so identical inputs
 * produce byte-identical documents.
 */

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGINS: Margins = { top: 34, right: 20, bottom: 42, left: 58 };

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(x: number): number {
    if (this.d1 === this.d0) {
      return (this.r0 + this.r1) / 2;
    }
    return this.r0 + ((x - this.d0) / (this.d1 - this.d0)) * (this.r1 - this.r0);
  }

  ticks(count = 5): number[] {
    const span = this.d1 - this.d0;
    if (span <= 0) {
      return [this.d0];
    }
    const step = Math.pow(10, Math.floor(Math.log10(span / count)));
    const err = (span / count) / step;
    const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
    const s = step * mult;
    const start = Math.ceil(this.d0 / s) * s;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12; v += s) {
      out.push(Number(v.toPrecision(12)));
    }
    return out;
  }
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isNaN(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) {
    throw new Error("no finite values to scale");
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

const fmt = (x: number): string => {
  if (!Number.isFinite(x)) return "0";
  return Number(x.toPrecision(6)).toString();
};

export function polyline(xs: number[], ys: number[], sx: LinearScale, sy: LinearScale): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (Number.isNaN(ys[i])) continue;
    pts.push(`${fmt(sx.map(xs[i]))},${fmt(sy.map(ys[i]))}`);
  }
  return pts.join(" ");
}

/** Closed band between upper and lower series (mean +- std shading). */
export function bandPath(
  xs: number[],
  upper: number[],
  lower: number[],
  sx: LinearScale,
  sy: LinearScale,
): string {
  const fwd: string[] = [];
  const back: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (Number.isNaN(upper[i]) || Number.isNaN(lower[i])) continue;
    fwd.push(`${fmt(sx.map(xs[i]))},${fmt(sy.map(upper[i]))}`);
    back.push(`${fmt(sx.map(xs[i]))},${fmt(sy.map(lower[i]))}`);
  }
  back.reverse();
  return `M ${fwd.join(" L ")} L ${back.join(" L ")} Z`;
}

export const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"];

export interface Chart {
  width: number;
  height: number;
  body: string[];
}

export function axes(
  sx: LinearScale,
  sy: LinearScale,
  xLabel: string,
  yLabel: string,
  width: number,
  height: number,
  m: Margins,
): string {
  const parts: string[] = [];
  parts.push(
    `<line x1="${m.left}" y1="${height - m.bottom}" x2="${width - m.right}" y2="${height - m.bottom}" stroke="#333"/>`,
  );
  parts.push(`<line x1="${m.left}" y1="${m.top}" x2="${m.left}" y2="${height - m.bottom}" stroke="#333"/>`);
  for (const t of sx.ticks()) {
    const x = fmt(sx.map(t));
    parts.push(`<line x1="${x}" y1="${height - m.bottom}" x2="${x}" y2="${height - m.bottom + 4}" stroke="#333"/>`);
    parts.push(
      `<text x="${x}" y="${height - m.bottom + 16}" font-size="10" text-anchor="middle" fill="#333">${fmt(t)}</text>`,
    );
  }
  for (const t of sy.ticks()) {
    const y = fmt(sy.map(t));
    parts.push(`<line x1="${m.left - 4}" y1="${y}" x2="${m.left}" y2="${y}" stroke="#333"/>`);
    parts.push(
      `<text x="${m.left - 7}" y="${y}" font-size="10" text-anchor="end" dominant-baseline="middle" fill="#333">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(m.left + width - m.right) / 2}" y="${height - 8}" font-size="11" text-anchor="middle" fill="#333">${xLabel}</text>`,
  );
  parts.push(
    `<text x="14" y="${(m.top + height - m.bottom) / 2}" font-size="11" text-anchor="middle" fill="#333" transform="rotate(-90 14 ${(m.top + height - m.bottom) / 2})">${yLabel}</text>`,
  );
  return parts.join("\n");
}

export function dottedHorizontal(
  y: number,
  label: string,
  sy: LinearScale,
  width: number,
  m: Margins,
  color: string,
): string {
  const yy = fmt(sy.map(y));
  return (
    `<line x1="${m.left}" y1="${yy}" x2="${width - m.right}" y2="${yy}" stroke="${color}" stroke-dasharray="3,3"/>` +
    `<text x="${width - m.right - 2}" y="${fmt(sy.map(y) - 3)}" font-size="9" text-anchor="end" fill="${color}">${label}</text>`
  );
}

export function document(
  title: string,
  configHash: string,
  body: string[],
  width = 560,
  height = 360,
): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<metadata>config_hash=${configHash}</metadata>`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="18" font-size="13" text-anchor="middle" fill="#111">${title}</text>`,
    ...body,
    `<text x="${width - 6}" y="${height - 4}" font-size="8" text-anchor="end" fill="#999">config ${configHash}</text>`,
    `</svg>`,
    "",
  ].join("\n");
}

export function legend(entries: Array<[string, string]>, m: Margins): string {
  const parts: string[] = [];
  entries.forEach(([label, color], i) => {
    const y = m.top + 6 + i * 14;
    parts.push(`<line x1="${m.left + 8}" y1="${y}" x2="${m.left + 28}" y2="${y}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${m.left + 33}" y="${y + 3}" font-size="10" fill="#333">${label}</text>`);
  });
  return parts.join("\n");
}
