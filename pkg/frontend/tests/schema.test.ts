import { join } from "node:path";
import { describe, expect, it } from "vitest";
import {
  alphasOf,
  loadRun,
  mean,
  metricsOf,
  parseRecord,
  parseSeries,
  SchemaError,
  stderr,
  trialValues,
} from "../src/schema.js";

const here = new URL(".", import.meta.url).pathname;
const testdata = join(here, "..", "testdata");

describe("record.json parsing", () => {
  it("loads a CLI-produced record", () => {
    const { record } = loadRun(join(testdata, "sweep"));
    expect(record.experiment).toBe("alpha_sweep_strichartz");
    expect(record.schema_version).toBe(1);
    expect(record.run_id).toMatch(/^[0-9a-f]{12}$/);
    expect(record.slopes.strichartz_deviation.ci).toHaveLength(2);
  });

  it("rejects invalid JSON", () => {
    expect(() => parseRecord("{nope")).toThrow(SchemaError);
  });

  it("names missing fields", () => {
    expect(() => parseRecord(JSON.stringify({ experiment: "x" }))).toThrow(
      /missing required fields: .*run_id/,
    );
  });

  it("rejects unknown schema versions", () => {
    const { record } = loadRun(join(testdata, "sweep"));
    const bumped = { ...record, schema_version: 2 };
    expect(() => parseRecord(JSON.stringify(bumped))).toThrow(
      /schema_version 2/,
    );
  });
});

describe("series.csv parsing", () => {
  it("loads long-format rows with numeric coercion", () => {
    const { series } = loadRun(join(testdata, "sweep"));
    expect(series.length).toBeGreaterThan(0);
    expect(series[0].experiment).toBe("alpha_sweep_strichartz");
    expect(typeof series[0].alpha).toBe("number");
    expect(typeof series[0].value).toBe("number");
  });

  it("names missing columns", () => {
    expect(() => parseSeries("experiment,alpha,trial\n")).toThrow(
      /missing required columns: metric, value/,
    );
  });

  it("rejects ragged rows", () => {
    const text = "experiment,alpha,trial,metric,value\nx,1.0,0,m\n";
    expect(() => parseSeries(text)).toThrow(/row 1 has 4 fields/);
  });

  it("rejects an empty file", () => {
    expect(() => parseSeries("")).toThrow(/empty/);
  });
});

describe("series helpers", () => {
  it("extracts sorted alphas and metrics", () => {
    const { series } = loadRun(join(testdata, "sweep"));
    const alphas = alphasOf(series);
    expect(alphas).toEqual([...alphas].sort((a, b) => a - b));
    expect(metricsOf(series)).toContain("strichartz_deviation");
  });

  it("orders trial values by trial index", () => {
    const { series } = loadRun(join(testdata, "sweep"));
    const alpha = alphasOf(series)[0];
    const vals = trialValues(series, "strichartz_deviation", alpha);
    expect(vals.length).toBeGreaterThan(1);
  });

  it("mean and stderr agree with direct formulas", () => {
    expect(mean([1, 2, 3, 4])).toBe(2.5);
    expect(stderr([1, 2, 3, 4])).toBeCloseTo(
      Math.sqrt(((1.5 ** 2 + 0.5 ** 2) * 2) / 3 / 4),
      12,
    );
    expect(stderr([5])).toBe(0);
  });
});
