/**
 * Minimal deterministic SVG emitter.  All coordinates are formatted with a
 * fixed precision and no timestamps, ids, or random attributes appear, so
 * identical figure data always yields byte-identical files.
 */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { top: 40, right: 24, bottom: 52, left: 64 };

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export interface Scale {
  (value: number): number;
  ticks: number[];
  domain: [number, number];
  log: boolean;
}

function tickStep(span: number): number {
  const raw = span / 5;
  const pow = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (m * pow >= raw) return m * pow;
  }
  return 10 * pow;
}

export function linearScale(
  lo: number,
  hi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  if (hi === lo) {
    hi = lo + 1;
  }
  const pad = 0.05 * (hi - lo);
  const d0 = lo - pad;
  const d1 = hi + pad;
  const f = (v: number) =>
    rangeLo + ((v - d0) / (d1 - d0)) * (rangeHi - rangeLo);
  const step = tickStep(d1 - d0);
  const ticks: number[] = [];
  for (let t = Math.ceil(d0 / step) * step; t <= d1 + 1e-12; t += step) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return Object.assign(f, { ticks, domain: [d0, d1] as [number, number], log: false });
}

export function logScale(
  lo: number,
  hi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  if (lo <= 0 || hi <= 0) {
    throw new Error("log scale requires positive domain");
  }
  const l0 = Math.log10(lo) - 0.05;
  const l1 = Math.log10(hi) + 0.05;
  const f = (v: number) =>
    rangeLo + ((Math.log10(v) - l0) / (l1 - l0)) * (rangeHi - rangeLo);
  const ticks: number[] = [];
  for (let e = Math.ceil(l0); e <= Math.floor(l1); e++) {
    ticks.push(Math.pow(10, e));
  }
  if (ticks.length < 2) {
    ticks.length = 0;
    ticks.push(Math.pow(10, l0 + 0.05), Math.pow(10, l1 - 0.05));
  }
  return Object.assign(f, { ticks, domain: [l0, l1] as [number, number], log: true });
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">${escapeXml(title)}</text>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1.5, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string): void {
    this.parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${r}" fill="${fill}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  text(x: number, y: number, content: string, anchor = "start", size = 12): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-family="sans-serif" font-size="${size}">${escapeXml(content)}</text>`,
    );
  }

  axes(xLabel: string, yLabel: string, xScale: Scale, yScale: Scale): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.line(x0, y0, x1, y0, "black", 1);
    this.line(x0, y0, x0, y1, "black", 1);
    for (const t of xScale.ticks) {
      const px = xScale(t);
      if (px < x0 - 0.5 || px > x1 + 0.5) continue;
      this.line(px, y0, px, y0 + 5, "black", 1);
      this.text(px, y0 + 18, tickLabel(t), "middle", 11);
    }
    for (const t of yScale.ticks) {
      const py = yScale(t);
      if (py > y0 + 0.5 || py < y1 - 0.5) continue;
      this.line(x0 - 5, py, x0, py, "black", 1);
      this.text(x0 - 8, py + 4, tickLabel(t), "end", 11);
    }
    this.text((x0 + x1) / 2, HEIGHT - 12, xLabel, "middle");
    this.parts.push(
      `<text x="18" y="${fmt((y0 + y1) / 2)}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 ${fmt((y0 + y1) / 2)})">${escapeXml(yLabel)}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function tickLabel(t: number): string {
  if (t !== 0 && (Math.abs(t) < 1e-3 || Math.abs(t) >= 1e4)) {
    return t.toExponential(0);
  }
  return Number(t.toPrecision(6)).toString();
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}
