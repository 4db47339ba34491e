/**
 * Sweep CSV contract shared with the solver package. The frontend never
 * links against the solver; this file is the whole interface.
 */

export const CSV_COLUMNS = [
  "axis_name",
  "axis_value",
  "solver",
  "mean_ee_bits_per_joule",
  "std_ee",
  "mean_sumrate_bps",
  "std_sumrate",
  "trials",
  "failures",
  "mean_dinkelbach_iters",
] as const;

export interface SweepRow {
  axis_name: string;
  axis_value: number;
  solver: string;
  mean_ee_bits_per_joule: number;
  std_ee: number;
  mean_sumrate_bps: number;
  std_sumrate: number;
  trials: number;
  failures: number;
  mean_dinkelbach_iters: number;
}

export class SchemaError extends Error {}

/** Parse and validate a sweep CSV; the header must match the schema exactly. */
export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: expected the sweep header row");
  }
  const header = lines[0].split(",");
  const expected = [...CSV_COLUMNS];
  const missing = expected.filter((c) => !header.includes(c));
  const unexpected = header.filter((c) => !expected.includes(c as never));
  if (missing.length > 0 || unexpected.length > 0) {
    const parts = [];
    if (missing.length > 0) parts.push(`missing columns: ${missing.join(", ")}`);
    if (unexpected.length > 0)
      parts.push(`unexpected columns: ${unexpected.join(", ")}`);
    throw new SchemaError(`CSV does not match the sweep schema (${parts.join("; ")})`);
  }
  if (header.join(",") !== expected.join(",")) {
    throw new SchemaError(
      `CSV columns out of order: expected ${expected.join(",")}`,
    );
  }
  const rows: SweepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== expected.length) {
      throw new SchemaError(
        `row ${i}: expected ${expected.length} cells, got ${cells.length}`,
      );
    }
    const rec: Record<string, string> = {};
    expected.forEach((c, j) => (rec[c] = cells[j]));
    const num = (col: string): number => {
      const v = Number(rec[col]);
      if (rec[col] === "" || Number.isNaN(v)) {
        if (rec[col] === "nan") return NaN;
        throw new SchemaError(`row ${i}: column '${col}' is not numeric: '${rec[col]}'`);
      }
      return v;
    };
    rows.push({
      axis_name: rec.axis_name,
      axis_value: num("axis_value"),
      solver: rec.solver,
      mean_ee_bits_per_joule: num("mean_ee_bits_per_joule"),
      std_ee: num("std_ee"),
      mean_sumrate_bps: num("mean_sumrate_bps"),
      std_sumrate: num("std_sumrate"),
      trials: num("trials"),
      failures: num("failures"),
      mean_dinkelbach_iters: num("mean_dinkelbach_iters"),
    });
  }
  return rows;
}
