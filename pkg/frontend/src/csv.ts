/** Minimal CSV reading for the experiment outputs (no quoting, no escapes). */

export interface Table {
  header: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV input");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { header, rows };
}

export function requireColumns(table: Table, names: string[], source: string): void {
  for (const name of names) {
    if (!table.header.includes(name)) {
      throw new SchemaError(`${source}: missing required column '${name}'`);
    }
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing required column '${name}'`);
  }
  return table.rows.map((row) => Number(row[idx]));
}

/** Column that may contain empty cells; empties become NaN. */
export function optionalColumn(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing required column '${name}'`);
  }
  return table.rows.map((row) => (row[idx] === "" || row[idx] === undefined ? NaN : Number(row[idx])));
}
