/**
 * Canvas renderers for the explorer views.  Each renderer draws through a
 * minimal 2D-context interface so tests can substitute a recording stub and
 * assert exactly what would be painted.
 */

import { formatScore, heightToColor, valueToColor, MISSING_COLOR } from "./color.js";
import {
  alignedTraces,
  dendrogramLayout,
  extent,
  inPhaseCells,
  landEntryMap,
  scaleLinear,
  tileRect,
  type AlignedTraces,
  type GridGeometry,
  type ScatterPoint,
  type ScoreIndex,
  type TraceSource,
} from "./layout.js";
import type {
  BoundsData,
  DendrogramData,
  LandEntry,
  ProfileData,
  ThumbnailData,
  VariogramData,
} from "./types.js";

/** The subset of CanvasRenderingContext2D the renderers rely on. */
export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
}

export const HIGHLIGHT_COLOR = "#4fc3f7";
export const SELECT_COLOR = "#ffffff";
export const PHASE_OUTLINE_COLOR = "#ffd54f";
export const TREND_COLOR = "#ff8c00";
export const AXIS_COLOR = "#888888";

/** Categorical palette for shot-number coloring. */
export const SHOT_PALETTE = [
  "#e6794a",
  "#4fc3f7",
  "#9ccc65",
  "#ba68c8",
  "#ffd54f",
  "#4db6ac",
  "#f06292",
  "#a1887f",
  "#90a4ae",
  "#dce775",
];

export function shotColor(shot: number): string {
  const k = ((shot % SHOT_PALETTE.length) + SHOT_PALETTE.length) % SHOT_PALETTE.length;
  return SHOT_PALETTE[k] as string;
}

/** Hover-tooltip text for a score matrix tile. */
export function tileTooltip(bullet1: string, bullet2: string, value: number | null): string {
  return `${bullet1} vs ${bullet2}: ${formatScore(value)}`;
}

/** K x K bullet-score matrix, colored by the anchored similarity scale. */
export function renderScoreMatrix(
  ctx: Ctx2D,
  g: GridGeometry,
  order: string[],
  index: ScoreIndex,
  range: [number, number],
  selected: [string, string] | null,
): void {
  ctx.font = "10px sans-serif";
  for (let row = 0; row < order.length; row++) {
    for (let col = 0; col < order.length; col++) {
      const rowId = order[row] as string;
      const colId = order[col] as string;
      const score = index.get(rowId, colId);
      const rect = tileRect(g, row, col);
      ctx.fillStyle =
        score === null ? MISSING_COLOR : valueToColor(score.ccf_diff, range);
      ctx.fillRect(rect.x, rect.y, rect.w - 1, rect.h - 1);
    }
  }
  if (selected !== null) {
    const row = order.indexOf(selected[0]);
    const col = order.indexOf(selected[1]);
    if (row >= 0 && col >= 0) {
      const rect = tileRect(g, row, col);
      ctx.strokeStyle = SELECT_COLOR;
      ctx.lineWidth = 2;
      ctx.strokeRect(rect.x, rect.y, rect.w - 1, rect.h - 1);
    }
  }
  ctx.fillStyle = AXIS_COLOR;
  ctx.textAlign = "right";
  ctx.textBaseline = "middle";
  const labelStep = g.cell >= 10 ? 1 : Math.ceil(10 / g.cell);
  for (let row = 0; row < order.length; row += labelStep) {
    const rect = tileRect(g, row, 0);
    ctx.fillText(order[row] as string, g.originX - 4, rect.y + rect.h / 2);
  }
}

function hatchCell(ctx: Ctx2D, x: number, y: number, w: number, h: number): void {
  ctx.strokeStyle = "#555555";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x, y + h);
  ctx.lineTo(x + w, y);
  ctx.moveTo(x, y + h / 2);
  ctx.lineTo(x + w / 2, y);
  ctx.moveTo(x + w / 2, y + h);
  ctx.lineTo(x + w, y + h / 2);
  ctx.stroke();
}

/**
 * 6 x 6 land-correlation matrix for a selected pair: cells colored and
 * labeled by their correlation (3 decimals), invalid cells hatched, and the
 * six in-phase cells outlined according to the pair's phase.
 */
export function renderLandMatrix(
  ctx: Ctx2D,
  g: GridGeometry,
  entries: LandEntry[],
  phase: number | null,
  range: [number, number],
  selected: [number, number] | null,
): void {
  const byCell = landEntryMap(entries);
  ctx.font = "11px sans-serif";
  for (let i = 1; i <= g.n; i++) {
    for (let j = 1; j <= g.n; j++) {
      const entry = byCell.get(`${i},${j}`);
      const rect = tileRect(g, i - 1, j - 1);
      if (entry === undefined || !entry.valid) {
        ctx.fillStyle = MISSING_COLOR;
        ctx.fillRect(rect.x, rect.y, rect.w - 1, rect.h - 1);
        hatchCell(ctx, rect.x, rect.y, rect.w - 1, rect.h - 1);
        continue;
      }
      ctx.fillStyle = valueToColor(entry.ccf, range);
      ctx.fillRect(rect.x, rect.y, rect.w - 1, rect.h - 1);
      ctx.fillStyle = "#111111";
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(formatScore(entry.ccf), rect.x + rect.w / 2, rect.y + rect.h / 2);
    }
  }
  ctx.strokeStyle = PHASE_OUTLINE_COLOR;
  ctx.lineWidth = 3;
  for (const [i, j] of inPhaseCells(phase, g.n)) {
    const rect = tileRect(g, i - 1, j - 1);
    ctx.strokeRect(rect.x + 1, rect.y + 1, rect.w - 3, rect.h - 3);
  }
  if (selected !== null) {
    const rect = tileRect(g, selected[0] - 1, selected[1] - 1);
    ctx.strokeStyle = SELECT_COLOR;
    ctx.lineWidth = 2;
    ctx.strokeRect(rect.x, rect.y, rect.w - 1, rect.h - 1);
  }
}

export interface ChartFrame {
  x: (v: number) => number;
  y: (v: number) => number;
  left: number;
  top: number;
  width: number;
  height: number;
}

/** Build pixel scales for a chart area with the y axis pointing up. */
export function chartFrame(
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
  margin = 36,
): ChartFrame {
  return {
    x: scaleLinear(xDomain, [margin, width - 8]),
    y: scaleLinear(yDomain, [height - margin, 8]),
    left: margin,
    top: 8,
    width,
    height,
  };
}

function drawAxes(ctx: Ctx2D, frame: ChartFrame): void {
  ctx.strokeStyle = AXIS_COLOR;
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(frame.left, frame.top);
  ctx.lineTo(frame.left, frame.height - 36 + 4);
  ctx.lineTo(frame.width - 8, frame.height - 36 + 4);
  ctx.stroke();
}

/**
 * Scatter view: x = first bullet's slot, y = score, color = second bullet's
 * shot number.  Highlighted indices render larger with an outline.
 */
export function renderScatter(
  ctx: Ctx2D,
  frame: ChartFrame,
  points: ScatterPoint[],
  highlighted: Set<number>,
): void {
  drawAxes(ctx, frame);
  points.forEach((p, k) => {
    const px = frame.x(p.x);
    const py = frame.y(p.y);
    const hot = highlighted.has(k);
    ctx.fillStyle = shotColor(p.secondShot);
    ctx.beginPath();
    ctx.arc(px, py, hot ? 5 : 3, 0, Math.PI * 2);
    ctx.fill();
    if (hot) {
      ctx.strokeStyle = HIGHLIGHT_COLOR;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(px, py, 7, 0, Math.PI * 2);
      ctx.stroke();
    }
  });
}

/** Line view: one polyline per second bullet over the same coordinates. */
export function renderPolylines(
  ctx: Ctx2D,
  frame: ChartFrame,
  polylines: Map<string, ScatterPoint[]>,
  shotOf: (second: string) => number,
): void {
  drawAxes(ctx, frame);
  for (const [second, pts] of polylines) {
    if (pts.length === 0) {
      continue;
    }
    ctx.strokeStyle = shotColor(shotOf(second));
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    pts.forEach((p, k) => {
      const px = frame.x(p.x);
      const py = frame.y(p.y);
      if (k === 0) {
        ctx.moveTo(px, py);
      } else {
        ctx.lineTo(px, py);
      }
    });
    ctx.stroke();
  }
}

/** Variogram view: score-vs-distance points plus the published trend line. */
export function renderVariogram(
  ctx: Ctx2D,
  frame: ChartFrame,
  variogram: VariogramData,
  highlighted: number | null,
): void {
  drawAxes(ctx, frame);
  variogram.points.forEach((p, k) => {
    ctx.fillStyle = k === highlighted ? HIGHLIGHT_COLOR : "#bbbbbb";
    ctx.beginPath();
    ctx.arc(frame.x(p.distance), frame.y(p.score), k === highlighted ? 5 : 3, 0, Math.PI * 2);
    ctx.fill();
  });
  const { xs, ys } = variogram.trend;
  if (xs.length > 0) {
    ctx.strokeStyle = TREND_COLOR;
    ctx.lineWidth = 2;
    ctx.beginPath();
    xs.forEach((xv, k) => {
      const px = frame.x(xv);
      const py = frame.y(ys[k] as number);
      if (k === 0) {
        ctx.moveTo(px, py);
      } else {
        ctx.lineTo(px, py);
      }
    });
    ctx.stroke();
  }
}

/** Dendrogram drawn to the left of the clustered matrix, leaves downward. */
export function renderDendrogram(
  ctx: Ctx2D,
  dend: DendrogramData,
  displayOrder: string[],
  leafPixel: (slot: number) => number,
  heightPixel: (h: number) => number,
): void {
  const layout = dendrogramLayout(dend, displayOrder);
  ctx.strokeStyle = "#aaaaaa";
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (const s of layout.segments) {
    ctx.moveTo(heightPixel(s.y1), leafPixel(s.x1));
    ctx.lineTo(heightPixel(s.y2), leafPixel(s.x2));
  }
  ctx.stroke();
}

/** Two land signals overlaid at their best alignment. */
export function renderSignalOverlay(
  ctx: Ctx2D,
  frame: ChartFrame,
  traces: AlignedTraces,
  colors: [string, string] = ["#4fc3f7", "#ff8c00"],
): void {
  drawAxes(ctx, frame);
  const drawTrace = (xs: number[], ys: (number | null)[], color: string) => {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.2;
    ctx.beginPath();
    let pen = false;
    xs.forEach((xv, k) => {
      const yv = ys[k];
      if (yv === null || yv === undefined) {
        pen = false;
        return;
      }
      const px = frame.x(xv);
      const py = frame.y(yv);
      if (pen) {
        ctx.lineTo(px, py);
      } else {
        ctx.moveTo(px, py);
        pen = true;
      }
    });
    ctx.stroke();
  };
  drawTrace(traces.xs1, traces.ys1, colors[0]);
  drawTrace(traces.xs2, traces.ys2, colors[1]);
}

/** Build overlay traces and domains for a signal pair at a given lag. */
export function signalOverlayModel(
  sig1: TraceSource,
  sig2: TraceSource,
  lag: number | null,
): { traces: AlignedTraces; xDomain: [number, number]; yDomain: [number, number] } {
  const traces = alignedTraces(sig1, sig2, lag);
  const xDomain = extent([...traces.xs1, ...traces.xs2]);
  const finite = [...traces.ys1, ...traces.ys2].filter((v): v is number => v !== null);
  const yDomain = extent(finite);
  return { traces, xDomain, yDomain };
}

/** Land profile with its detected groove bounds marked as vertical lines. */
export function renderProfile(
  ctx: Ctx2D,
  frame: ChartFrame,
  profile: ProfileData,
  bounds: BoundsData | null,
): void {
  drawAxes(ctx, frame);
  ctx.strokeStyle = "#cccccc";
  ctx.lineWidth = 1;
  ctx.beginPath();
  let pen = false;
  profile.heights.forEach((h, k) => {
    if (h === null) {
      pen = false;
      return;
    }
    const px = frame.x(k * profile.x_inc);
    const py = frame.y(h);
    if (pen) {
      ctx.lineTo(px, py);
    } else {
      ctx.moveTo(px, py);
      pen = true;
    }
  });
  ctx.stroke();
  if (bounds !== null) {
    for (const [index, flagged] of [
      [bounds.left_index, bounds.left_flagged],
      [bounds.right_index, bounds.right_flagged],
    ] as [number, boolean][]) {
      const px = frame.x(index * profile.x_inc);
      ctx.strokeStyle = flagged ? "#e57373" : TREND_COLOR;
      ctx.lineWidth = flagged ? 2 : 1.5;
      ctx.beginPath();
      ctx.moveTo(px, frame.top);
      ctx.lineTo(px, frame.height - 32);
      ctx.stroke();
    }
  }
}

/**
 * Scan thumbnail: a row-by-row height heatmap with the chosen crosscut drawn
 * as a horizontal line at its y location.
 */
export function renderThumbnail(
  ctx: Ctx2D,
  thumb: ThumbnailData,
  crosscutY: number | null,
  width: number,
  height: number,
): void {
  const rows = thumb.heights.length;
  const cols = rows > 0 ? (thumb.heights[0] as (number | null)[]).length : 0;
  if (rows === 0 || cols === 0) {
    return;
  }
  const finite: number[] = [];
  for (const row of thumb.heights) {
    for (const v of row) {
      if (v !== null) {
        finite.push(v);
      }
    }
  }
  const [lo, hi] = extent(finite);
  const cw = width / cols;
  const ch = height / rows;
  for (let r = 0; r < rows; r++) {
    const row = thumb.heights[r] as (number | null)[];
    for (let c = 0; c < cols; c++) {
      const v = row[c];
      ctx.fillStyle = v === null || v === undefined ? "#000000" : heightToColor((v - lo) / (hi - lo || 1));
      ctx.fillRect(c * cw, r * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
  if (crosscutY !== null) {
    const totalY = rows * thumb.y_inc;
    const py = totalY > 0 ? (crosscutY / totalY) * height : 0;
    ctx.strokeStyle = TREND_COLOR;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(0, py);
    ctx.lineTo(width, py);
    ctx.stroke();
  }
}
