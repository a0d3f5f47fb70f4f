/** Entry point: render one figure from a plot spec file.
 *
 *   node dist/cli.js --spec path/to/spec.json
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { render } from "./figures.js";
import { loadSpec } from "./spec.js";

export function main(argv: string[]): number {
  const specIdx = argv.indexOf("--spec");
  if (specIdx < 0 || specIdx + 1 >= argv.length) {
    process.stderr.write("usage: cli --spec <spec.json>\n");
    return 2;
  }
  try {
    const spec = loadSpec(argv[specIdx + 1]);
    const svg = render(spec);
    fs.mkdirSync(path.dirname(spec.output), { recursive: true });
    fs.writeFileSync(spec.output, svg, "utf-8");
    process.stdout.write(`${spec.output}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
