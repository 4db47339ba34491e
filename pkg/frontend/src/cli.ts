#!/usr/bin/env node
/** plots <figure-kind> <sweep.csv> <out.svg> */

import { readFileSync, writeFileSync } from "node:fs";
import { parseSweepCsv, SchemaError } from "./schema.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./render.js";

export function main(argv: string[]): number {
  if (argv.length !== 3) {
    process.stderr.write(
      `usage: plots <figure-kind> <sweep.csv> <out.svg>\n` +
        `figure kinds: ${FIGURE_KINDS.join(", ")}\n`,
    );
    return 1;
  }
  const [kind, csvPath, outPath] = argv;
  if (!FIGURE_KINDS.includes(kind as FigureKind)) {
    process.stderr.write(
      `unknown figure kind '${kind}'; expected one of ${FIGURE_KINDS.join(", ")}\n`,
    );
    return 1;
  }
  let text: string;
  try {
    text = readFileSync(csvPath, "utf8");
  } catch (err) {
    process.stderr.write(`cannot read ${csvPath}: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const rows = parseSweepCsv(text);
    const svg = renderFigure(kind as FigureKind, rows);
    writeFileSync(outPath, svg);
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  process.stdout.write(`wrote ${outPath}\n`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
