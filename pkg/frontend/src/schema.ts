/**
 * Readers for the experiment record layout written by the simulation CLI:
 * one directory per run holding record.json (aggregates, fitted slopes)
 * and series.csv (long-format per-trial values).
 *
 * Every figure consumes only these two files; nothing here recomputes
 * physics, and schema violations are reported by naming the offending
 * column or field.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

export const SERIES_COLUMNS = [
  "experiment",
  "alpha",
  "trial",
  "metric",
  "value",
] as const;

export interface SlopeFit {
  slope: number;
  intercept: number;
  ci: [number, number];
}

export interface ExperimentRecord {
  schema_version: number;
  experiment: string;
  run_id: string;
  config: Record<string, unknown>;
  master_seed: number;
  stats: Record<string, Record<string, number> | number>;
  slopes: Record<string, SlopeFit>;
  warnings: string[];
  n_series_rows: number;
}

export interface SeriesRow {
  experiment: string;
  alpha: number;
  trial: number;
  metric: string;
  value: number;
}

export class SchemaError extends Error {}

const REQUIRED_RECORD_FIELDS = [
  "schema_version",
  "experiment",
  "run_id",
  "config",
  "stats",
  "slopes",
] as const;

export function parseRecord(text: string): ExperimentRecord {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`record.json is not valid JSON: ${err}`);
  }
  const obj = raw as Record<string, unknown>;
  const missing = REQUIRED_RECORD_FIELDS.filter((f) => !(f in obj));
  if (missing.length > 0) {
    throw new SchemaError(
      `record.json missing required fields: ${missing.join(", ")}`,
    );
  }
  if (obj["schema_version"] !== 1) {
    throw new SchemaError(
      `unsupported schema_version ${obj["schema_version"]} (expected 1)`,
    );
  }
  return obj as unknown as ExperimentRecord;
}

export function parseSeries(text: string): SeriesRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("series.csv is empty (no header)");
  }
  const header = lines[0].split(",");
  const missing = SERIES_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `series.csv missing required columns: ${missing.join(", ")}`,
    );
  }
  const idx = Object.fromEntries(
    SERIES_COLUMNS.map((c) => [c, header.indexOf(c)]),
  );
  const rows: SeriesRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(
        `series.csv row ${i} has ${parts.length} fields, expected ${header.length}`,
      );
    }
    rows.push({
      experiment: parts[idx.experiment],
      alpha: Number(parts[idx.alpha]),
      trial: Number(parts[idx.trial]),
      metric: parts[idx.metric],
      value: Number(parts[idx.value]),
    });
  }
  return rows;
}

export interface RunData {
  record: ExperimentRecord;
  series: SeriesRow[];
}

export function loadRun(runDir: string): RunData {
  const record = parseRecord(readFileSync(join(runDir, "record.json"), "utf8"));
  const series = parseSeries(readFileSync(join(runDir, "series.csv"), "utf8"));
  return { record, series };
}

/** Distinct alphas in ascending order. */
export function alphasOf(series: SeriesRow[]): number[] {
  return [...new Set(series.map((r) => r.alpha))].sort((a, b) => a - b);
}

/** Distinct metric names in first-appearance order. */
export function metricsOf(series: SeriesRow[]): string[] {
  return [...new Set(series.map((r) => r.metric))];
}

/** Per-trial values of one metric at one alpha, ordered by trial index. */
export function trialValues(
  series: SeriesRow[],
  metric: string,
  alpha: number,
): number[] {
  return series
    .filter((r) => r.metric === metric && r.alpha === alpha)
    .sort((a, b) => a.trial - b.trial)
    .map((r) => r.value);
}

export function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function stderr(values: number[]): number {
  if (values.length < 2) return 0;
  const m = mean(values);
  const v =
    values.reduce((a, b) => a + (b - m) * (b - m), 0) / (values.length - 1);
  return Math.sqrt(v / values.length);
}
