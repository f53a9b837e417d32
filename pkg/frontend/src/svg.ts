/**
 * Minimal deterministic SVG scene builder: linear scales, axes, series marks.
 * Pure string assembly, so identical inputs give identical bytes.
 */

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  return fn;
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  if (lo === hi) return [lo];
  const step = niceStep((hi - lo) / count);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(roundTo(v, step));
  }
  return out;
}

function niceStep(raw: number): number {
  const pow = Math.pow(10, Math.floor(Math.log10(raw)));
  const frac = raw / pow;
  const nice = frac >= 5 ? 10 : frac >= 2 ? 5 : frac >= 1 ? 2 : 1;
  return nice * pow;
}

function roundTo(v: number, step: number): number {
  const digits = Math.max(0, -Math.floor(Math.log10(step)) + 1);
  return Number(v.toFixed(digits));
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : String(Number(v.toPrecision(6)));
}

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: [number, number][], stroke: string, dash?: string): void {
    const attr = dash ? ` stroke-dasharray="${dash}"` : "";
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"${attr}/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, content: string, anchor = "middle", size = 11): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" ` +
        `font-family="sans-serif" font-size="${size}">${escapeXml(content)}</text>`,
    );
  }

  errorBar(x: number, yLo: number, yHi: number, stroke: string, cap = 3): void {
    this.line(x, yLo, x, yHi, stroke);
    this.line(x - cap, yLo, x + cap, yLo, stroke);
    this.line(x - cap, yHi, x + cap, yHi, stroke);
  }

  axes(
    xScale: Scale,
    yScale: Scale,
    plot: { left: number; right: number; top: number; bottom: number },
    labels: { x: string; y: string },
  ): void {
    this.line(plot.left, plot.bottom, plot.right, plot.bottom, "#000");
    this.line(plot.left, plot.top, plot.left, plot.bottom, "#000");
    for (const t of ticks(xScale.domain)) {
      const x = xScale(t);
      this.line(x, plot.bottom, x, plot.bottom + 4, "#000");
      this.text(x, plot.bottom + 16, fmt(t));
    }
    for (const t of ticks(yScale.domain)) {
      const y = yScale(t);
      this.line(plot.left - 4, y, plot.left, y, "#000");
      this.text(plot.left - 7, y + 3, fmt(t), "end");
    }
    this.text((plot.left + plot.right) / 2, this.height - 6, labels.x);
    this.parts.push(
      `<text x="14" y="${fmt((plot.top + plot.bottom) / 2)}" text-anchor="middle" ` +
        `font-family="sans-serif" font-size="11" ` +
        `transform="rotate(-90 14 ${fmt((plot.top + plot.bottom) / 2)})">${escapeXml(labels.y)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n<rect width="100%" height="100%" fill="#fff"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export const SERIES_COLORS = ["#1f6fb2", "#d1495b", "#3b8255", "#8a6da3", "#b7792c"];
