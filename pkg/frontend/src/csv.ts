/**
 * Typed readers for the simulator's experiment CSVs.
 *
 * Every file starts with a `# beamalign-<kind>-v1 ...` comment line followed
 * by an RFC-4180 table. Schema violations raise with the missing columns
 * spelled out.
 */
import Papa from "papaparse";
import { z } from "zod";

export const detectionRow = z.object({
  sweep: z.string(),
  value: z.union([z.number(), z.string()]),
  scheme: z.string(),
  trials: z.number().int().nonnegative(),
  successes: z.number().int().nonnegative(),
  p_d: z.number().min(0).max(1),
  wilson_lo: z.number().min(0).max(1),
  wilson_hi: z.number().min(0).max(1),
});

export const rateRow = z.object({
  snr_bbf_db: z.number(),
  r_ub: z.number().nonnegative(),
  r_lb: z.number().nonnegative(),
});

export const pdpRow = z.object({
  stage: z.enum(["before", "after"]),
  tap: z.number().int().nonnegative(),
  energy: z.number().nonnegative(),
});

export type DetectionRow = z.infer<typeof detectionRow>;
export type RateRow = z.infer<typeof rateRow>;
export type PdpRow = z.infer<typeof pdpRow>;

export class SchemaError extends Error {
  constructor(
    message: string,
    readonly missingColumns: string[],
  ) {
    super(message);
    this.name = "SchemaError";
  }
}

function parseTable(text: string): { header: string[]; records: Record<string, unknown>[] } {
  const body = text
    .split(/\r?\n/)
    .filter((line) => line.length > 0 && !line.startsWith("#"))
    .join("\n");
  const parsed = Papa.parse<Record<string, unknown>>(body, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse failed: ${parsed.errors[0].message}`, []);
  }
  return { header: parsed.meta.fields ?? [], records: parsed.data };
}

function readRows<T>(text: string, schema: z.ZodType<T>, columns: string[], kind: string): T[] {
  const { header, records } = parseTable(text);
  const missing = columns.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${kind} CSV is missing required columns: ${missing.join(", ")}`,
      missing,
    );
  }
  return records.map((record, i) => {
    const result = schema.safeParse(record);
    if (!result.success) {
      throw new SchemaError(`${kind} CSV row ${i + 1} is invalid: ${result.error.message}`, []);
    }
    return result.data;
  });
}

export function readDetection(text: string): DetectionRow[] {
  return readRows(text, detectionRow, [
    "sweep",
    "value",
    "scheme",
    "trials",
    "successes",
    "p_d",
    "wilson_lo",
    "wilson_hi",
  ], "detection");
}

export function readRate(text: string): RateRow[] {
  return readRows(text, rateRow, ["snr_bbf_db", "r_ub", "r_lb"], "rate");
}

export function readPdp(text: string): PdpRow[] {
  return readRows(text, pdpRow, ["stage", "tap", "energy"], "pdp");
}
