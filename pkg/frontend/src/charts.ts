/**
 * Figure renderers for the three experiment CSV kinds.
 *
 * No statistics are recomputed here: the CSVs are the single source of
 * truth, the renderers only draw what they are given.
 */
import { readFileSync, writeFileSync } from "fs";

import { readDetection, readPdp, readRate, DetectionRow, PdpRow, RateRow } from "./csv.js";
import { linearScale, Svg, SERIES_COLORS } from "./svg.js";

export type FigureKind = "detection" | "rate" | "pdp";

export interface FigureSpec {
  kind: FigureKind;
  inputPath: string;
  outputPath: string;
  xLabel?: string;
  yLabel?: string;
}

const WIDTH = 560;
const HEIGHT = 380;
const PLOT = { left: 62, right: WIDTH - 20, top: 24, bottom: HEIGHT - 42 };

export class BoundOrderError extends Error {}

function numericValues(rows: DetectionRow[]): number[] {
  return rows.map((r, i) => (typeof r.value === "number" ? r.value : i));
}

export function renderDetection(text: string, xLabel?: string, yLabel?: string): string {
  const rows = readDetection(text);
  if (rows.length === 0) throw new Error("detection CSV has no data rows");
  const svg = new Svg(WIDTH, HEIGHT);
  const xs = numericValues(rows);
  const xDomain: [number, number] = [Math.min(...xs), Math.max(...xs)];
  const x = linearScale(xDomain, [PLOT.left, PLOT.right]);
  const y = linearScale([0, 1], [PLOT.bottom, PLOT.top]);
  svg.axes(x, y, PLOT, {
    x: xLabel ?? `sweep: ${rows[0].sweep}`,
    y: yLabel ?? "detection probability",
  });

  const schemes = [...new Set(rows.map((r) => r.scheme))].sort();
  schemes.forEach((scheme, si) => {
    const color = SERIES_COLORS[si % SERIES_COLORS.length];
    const series = rows
      .map((r, i) => ({ r, xv: xs[i] }))
      .filter(({ r }) => r.scheme === scheme);
    svg.polyline(series.map(({ r, xv }) => [x(xv), y(r.p_d)]), color);
    for (const { r, xv } of series) {
      svg.errorBar(x(xv), y(r.wilson_lo), y(r.wilson_hi), color);
      svg.circle(x(xv), y(r.p_d), 3, color);
    }
    svg.text(PLOT.right - 6, PLOT.top + 14 + 14 * si, scheme, "end");
    svg.circle(PLOT.right - 48, PLOT.top + 10 + 14 * si, 3, color);
  });
  return svg.render();
}

export function renderRate(text: string, xLabel?: string, yLabel?: string): string {
  const rows = readRate(text);
  if (rows.length === 0) throw new Error("rate CSV has no data rows");
  for (const row of rows) {
    if (row.r_lb > row.r_ub + 1e-9) {
      throw new BoundOrderError(
        `rate bounds out of order at ${row.snr_bbf_db} dB: r_lb=${row.r_lb} > r_ub=${row.r_ub}`,
      );
    }
  }
  const svg = new Svg(WIDTH, HEIGHT);
  const xs = rows.map((r) => r.snr_bbf_db);
  const top = Math.max(...rows.map((r) => r.r_ub));
  const x = linearScale([Math.min(...xs), Math.max(...xs)], [PLOT.left, PLOT.right]);
  const y = linearScale([0, top * 1.05], [PLOT.bottom, PLOT.top]);
  svg.axes(x, y, PLOT, {
    x: xLabel ?? "SNR before beamforming (dB)",
    y: yLabel ?? "ergodic rate (bits/s/Hz)",
  });
  svg.polyline(rows.map((r) => [x(r.snr_bbf_db), y(r.r_ub)]), SERIES_COLORS[0]);
  svg.polyline(rows.map((r) => [x(r.snr_bbf_db), y(r.r_lb)]), SERIES_COLORS[1], "5,3");
  for (const r of rows) {
    svg.circle(x(r.snr_bbf_db), y(r.r_ub), 2.5, SERIES_COLORS[0]);
    svg.circle(x(r.snr_bbf_db), y(r.r_lb), 2.5, SERIES_COLORS[1]);
  }
  svg.text(PLOT.left + 56, PLOT.top + 14, "matched-filter upper bound", "start");
  svg.circle(PLOT.left + 48, PLOT.top + 10, 3, SERIES_COLORS[0]);
  svg.text(PLOT.left + 56, PLOT.top + 28, "ISI-as-noise lower bound", "start");
  svg.circle(PLOT.left + 48, PLOT.top + 24, 3, SERIES_COLORS[1]);
  return svg.render();
}

export function renderPdp(text: string, xLabel?: string, yLabel?: string): string {
  const rows = readPdp(text);
  if (rows.length === 0) throw new Error("pdp CSV has no data rows");
  const stages: PdpRow["stage"][] = ["before", "after"];
  const svg = new Svg(WIDTH, HEIGHT);
  const peak = Math.max(...rows.map((r) => r.energy));
  const half = (PLOT.right - PLOT.left) / 2;
  stages.forEach((stage, si) => {
    const panel = {
      left: PLOT.left + si * (half + 10),
      right: PLOT.left + si * (half + 10) + half - 10,
      top: PLOT.top,
      bottom: PLOT.bottom,
    };
    const series = rows.filter((r) => r.stage === stage);
    const maxTap = Math.max(...series.map((r) => r.tap));
    const x = linearScale([-0.5, maxTap + 0.5], [panel.left, panel.right]);
    const y = linearScale([0, peak * 1.05 || 1], [panel.bottom, panel.top]);
    const barWidth = Math.max(2, (panel.right - panel.left) / (maxTap + 1) - 4);
    svg.line(panel.left, panel.bottom, panel.right, panel.bottom, "#000");
    for (const r of series) {
      svg.rect(
        x(r.tap) - barWidth / 2,
        y(r.energy),
        barWidth,
        panel.bottom - y(r.energy),
        SERIES_COLORS[si],
      );
      svg.text(x(r.tap), panel.bottom + 14, String(r.tap));
    }
    svg.text((panel.left + panel.right) / 2, PLOT.top - 8, `${stage} alignment`);
  });
  svg.text(WIDTH / 2, HEIGHT - 6, xLabel ?? "delay tap (chips)");
  svg.text(14, HEIGHT / 2, yLabel ?? "avg energy", "middle");
  return svg.render();
}

export function render(spec: FigureSpec): string {
  const text = readFileSync(spec.inputPath, "utf8");
  const out =
    spec.kind === "detection"
      ? renderDetection(text, spec.xLabel, spec.yLabel)
      : spec.kind === "rate"
        ? renderRate(text, spec.xLabel, spec.yLabel)
        : renderPdp(text, spec.xLabel, spec.yLabel);
  writeFileSync(spec.outputPath, out);
  return out;
}
