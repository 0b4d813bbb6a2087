/**
 * The four standard figure kinds built from experiment run directories.
 *
 * Each builder first extracts a plain structural-data object (the numbers
 * that will appear on the figure, all taken verbatim from record.json /
 * series.csv) and then renders it to SVG.  Golden tests compare the
 * structural data, which is stable across styling changes.
 */

import {
  alphasOf,
  mean,
  metricsOf,
  RunData,
  SchemaError,
  stderr,
  trialValues,
} from "./schema.js";
import {
  HEIGHT,
  linearScale,
  logScale,
  MARGIN,
  Scale,
  SvgBuilder,
  WIDTH,
} from "./svg.js";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export interface PointWithError {
  x: number;
  y: number;
  yerr: number;
}

export interface FigureData {
  kind: string;
  title: string;
  [key: string]: unknown;
}

export interface Figure {
  data: FigureData;
  svg: string;
}

function requireRows(run: RunData, what: string): void {
  if (run.series.length === 0) {
    throw new SchemaError(
      `cannot render ${what}: the run contains no trial rows`,
    );
  }
}

function plotArea(): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

function meanSeries(
  run: RunData,
  metric: string,
): PointWithError[] {
  return alphasOf(run.series)
    .map((alpha) => {
      const vals = trialValues(run.series, metric, alpha);
      return vals.length === 0
        ? null
        : { x: alpha, y: mean(vals), yerr: stderr(vals) };
    })
    .filter((p): p is PointWithError => p !== null);
}

function drawErrorBars(
  svg: SvgBuilder,
  pts: PointWithError[],
  xs: Scale,
  ys: Scale,
  color: string,
): void {
  for (const p of pts) {
    if (p.yerr > 0) {
      svg.line(xs(p.x), ys(p.y - p.yerr), xs(p.x), ys(p.y + p.yerr), color, 1);
    }
    svg.circle(xs(p.x), ys(p.y), 3.5, color);
  }
}

/* -------------------------------------------------------------------------
 * 1. Alpha sweep: log-log deviation vs alpha with the stored slope fit
 * ------------------------------------------------------------------------- */

export function alphaSweepFigure(run: RunData): Figure {
  requireRows(run, "alpha sweep");
  const metric = "strichartz_deviation";
  if (!metricsOf(run.series).includes(metric)) {
    throw new SchemaError(
      `alpha sweep figure requires metric column value '${metric}'`,
    );
  }
  const points = meanSeries(run, metric);
  const fit = run.record.slopes[metric];
  const data: FigureData = {
    kind: "alpha_sweep",
    title: `Strichartz deviation vs alpha (run ${run.record.run_id})`,
    points,
    slope: fit ? fit.slope : null,
    slope_ci: fit ? fit.ci : null,
    intercept: fit ? fit.intercept : null,
  };

  const area = plotArea();
  const xs = logScale(points[0].x, points[points.length - 1].x, area.x0, area.x1);
  const yVals = points.flatMap((p) => [p.y - p.yerr, p.y + p.yerr]).filter((v) => v > 0);
  const ys = logScale(Math.min(...yVals), Math.max(...yVals), area.y0, area.y1);
  const svg = new SvgBuilder(data.title);
  svg.axes("alpha", "mean Strichartz deviation", xs, ys);
  if (fit) {
    const fitted = (a: number) => Math.exp(fit.intercept + fit.slope * Math.log(a));
    svg.line(
      xs(points[0].x), ys(fitted(points[0].x)),
      xs(points[points.length - 1].x), ys(fitted(points[points.length - 1].x)),
      "#888888", 1, "5,4",
    );
    svg.text(
      area.x1 - 6, area.y1 + 14,
      `slope ${fit.slope.toFixed(3)}  [${fit.ci[0].toFixed(3)}, ${fit.ci[1].toFixed(3)}]`,
      "end",
    );
  }
  drawErrorBars(svg, points, xs, ys, PALETTE[0]);
  return { data, svg: svg.render() };
}

/* -------------------------------------------------------------------------
 * 2. Path-class comparison: one mean curve per class with legend
 * ------------------------------------------------------------------------- */

export function pathClassFigure(run: RunData): Figure {
  requireRows(run, "path-class comparison");
  const metrics = metricsOf(run.series).filter((m) => m.startsWith("norm_"));
  if (metrics.length === 0) {
    throw new SchemaError(
      "path-class figure requires metric column values starting with 'norm_'",
    );
  }
  const curves = metrics.map((metric) => ({
    label: metric.replace(/^norm_/, ""),
    points: meanSeries(run, metric),
  }));
  const data: FigureData = {
    kind: "path_class_comparison",
    title: `Operator norm by path class (run ${run.record.run_id})`,
    curves,
  };

  const area = plotArea();
  const allPts = curves.flatMap((c) => c.points);
  const xs = logScale(
    Math.min(...allPts.map((p) => p.x)),
    Math.max(...allPts.map((p) => p.x)),
    area.x0, area.x1,
  );
  const ys = linearScale(
    Math.min(...allPts.map((p) => p.y - p.yerr)),
    Math.max(...allPts.map((p) => p.y + p.yerr)),
    area.y0, area.y1,
  );
  const svg = new SvgBuilder(data.title);
  svg.axes("alpha", "mean operator norm", xs, ys);
  curves.forEach((curve, i) => {
    const color = PALETTE[i % PALETTE.length];
    svg.polyline(curve.points.map((p) => [xs(p.x), ys(p.y)]), color);
    drawErrorBars(svg, curve.points, xs, ys, color);
    const ly = area.y1 + 14 + 16 * i;
    svg.line(area.x0 + 8, ly - 4, area.x0 + 30, ly - 4, color, 2);
    svg.text(area.x0 + 36, ly, curve.label);
  });
  return { data, svg: svg.render() };
}

/* -------------------------------------------------------------------------
 * 3. Ionization: dispersal statistic vs alpha with per-trial scatter
 * ------------------------------------------------------------------------- */

export function ionizationFigure(run: RunData): Figure {
  requireRows(run, "ionization summary");
  const metric = "rage_statistic";
  if (!metricsOf(run.series).includes(metric)) {
    throw new SchemaError(
      `ionization figure requires metric column value '${metric}'`,
    );
  }
  const points = meanSeries(run, metric);
  const trials = run.series
    .filter((r) => r.metric === metric)
    .map((r) => ({ x: r.alpha, trial: r.trial, y: r.value }));
  const data: FigureData = {
    kind: "ionization",
    title: `Dispersal statistic vs alpha (run ${run.record.run_id})`,
    points,
    trials,
  };

  const area = plotArea();
  const xs = linearScale(
    Math.min(...points.map((p) => p.x)),
    Math.max(...points.map((p) => p.x)),
    area.x0, area.x1,
  );
  const lo = Math.min(...trials.map((t) => t.y), ...points.map((p) => p.y - p.yerr));
  const hi = Math.max(...trials.map((t) => t.y), ...points.map((p) => p.y + p.yerr));
  const ys = linearScale(lo, hi, area.y0, area.y1);
  const svg = new SvgBuilder(data.title);
  svg.axes("alpha", "rage statistic", xs, ys);
  for (const t of trials) {
    svg.circle(xs(t.x), ys(t.y), 2, "#bbbbbb");
  }
  svg.polyline(points.map((p) => [xs(p.x), ys(p.y)]), PALETTE[1]);
  drawErrorBars(svg, points, xs, ys, PALETTE[1]);
  return { data, svg: svg.render() };
}

/* -------------------------------------------------------------------------
 * 4. Block-norm heatmap
 * ------------------------------------------------------------------------- */

export function blockHeatmapFigure(run: RunData): Figure {
  requireRows(run, "block heatmap");
  const blockRows = run.series.filter((r) => /^block_\d+_\d+$/.test(r.metric));
  if (blockRows.length === 0) {
    throw new SchemaError(
      "block heatmap requires metric column values of the form 'block_j_k'",
    );
  }
  let n = 0;
  const entries: Array<{ j: number; k: number; value: number }> = [];
  for (const r of blockRows) {
    const m = r.metric.match(/^block_(\d+)_(\d+)$/)!;
    const j = Number(m[1]);
    const k = Number(m[2]);
    n = Math.max(n, j, k);
    entries.push({ j, k, value: r.value });
  }
  entries.sort((a, b) => a.j - b.j || a.k - b.k);
  const data: FigureData = {
    kind: "block_heatmap",
    title: `Time-block norms (run ${run.record.run_id})`,
    n,
    entries,
  };

  const area = plotArea();
  const side = Math.min(area.x1 - area.x0, area.y0 - area.y1);
  const cell = side / n;
  const vmax = Math.max(...entries.map((e) => e.value));
  const svg = new SvgBuilder(data.title);
  for (const e of entries) {
    const shade = vmax > 0 ? e.value / vmax : 0;
    const level = Math.round(255 * (1 - shade));
    const hex = level.toString(16).padStart(2, "0");
    svg.rect(
      area.x0 + (e.k - 1) * cell,
      area.y1 + (e.j - 1) * cell,
      cell, cell,
      `#ff${hex}${hex}`,
    );
    svg.text(
      area.x0 + (e.k - 0.5) * cell,
      area.y1 + (e.j - 0.5) * cell + 4,
      e.value.toPrecision(3),
      "middle", 11,
    );
  }
  for (let i = 1; i <= n; i++) {
    svg.text(area.x0 + (i - 0.5) * cell, area.y1 + n * cell + 16, `k=${i}`, "middle", 11);
    svg.text(area.x0 - 8, area.y1 + (i - 0.5) * cell + 4, `j=${i}`, "end", 11);
  }
  return { data, svg: svg.render() };
}

export const FIGURE_BUILDERS: Record<string, (run: RunData) => Figure> = {
  alpha_sweep: alphaSweepFigure,
  path_class_comparison: pathClassFigure,
  ionization: ionizationFigure,
  block_heatmap: blockHeatmapFigure,
};
