export { readDetection, readRate, readPdp, SchemaError } from "./csv.js";
export type { DetectionRow, RateRow, PdpRow } from "./csv.js";
export {
  render,
  renderDetection,
  renderRate,
  renderPdp,
  BoundOrderError,
} from "./charts.js";
export type { FigureSpec, FigureKind } from "./charts.js";
