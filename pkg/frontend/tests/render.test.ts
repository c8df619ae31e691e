import { describe, expect, it } from "vitest";

import { MISSING_COLOR, formatScore, valueToColor } from "../src/color.js";
import { ScoreIndex, gridGeometry, tileRect } from "../src/layout.js";
import {
  HIGHLIGHT_COLOR,
  PHASE_OUTLINE_COLOR,
  SELECT_COLOR,
  TREND_COLOR,
  chartFrame,
  renderLandMatrix,
  renderScatter,
  renderScoreMatrix,
  renderSignalOverlay,
  renderThumbnail,
  renderVariogram,
  signalOverlayModel,
  tileTooltip,
  type Ctx2D,
} from "../src/render.js";
import { ANALYSIS_PAYLOAD, INVALID_CELLS, SCORES_PAYLOAD, fakeLandEntries } from "./fixtures.js";

interface Op {
  op: string;
  [key: string]: unknown;
}

class StubCtx implements Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  font = "";
  textAlign: CanvasTextAlign = "left";
  textBaseline: CanvasTextBaseline = "alphabetic";
  readonly ops: Op[] = [];

  clearRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({ op: "clearRect", x, y, w, h });
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({ op: "fillRect", x, y, w, h, style: String(this.fillStyle) });
  }
  strokeRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({ op: "strokeRect", x, y, w, h, style: String(this.strokeStyle) });
  }
  beginPath(): void {
    this.ops.push({ op: "beginPath" });
  }
  moveTo(x: number, y: number): void {
    this.ops.push({ op: "moveTo", x, y });
  }
  lineTo(x: number, y: number): void {
    this.ops.push({ op: "lineTo", x, y });
  }
  arc(x: number, y: number, r: number): void {
    this.ops.push({ op: "arc", x, y, r });
  }
  stroke(): void {
    this.ops.push({ op: "stroke", style: String(this.strokeStyle) });
  }
  fill(): void {
    this.ops.push({ op: "fill", style: String(this.fillStyle) });
  }
  fillText(text: string, x: number, y: number): void {
    this.ops.push({ op: "fillText", text, x, y, style: String(this.fillStyle) });
  }
  save(): void {
    this.ops.push({ op: "save" });
  }
  restore(): void {
    this.ops.push({ op: "restore" });
  }
}

const RANGE: [number, number] = [0.05, 0.95];

describe("land matrix rendering", () => {
  const g = gridGeometry(6, 400, 400, 30);
  const entries = fakeLandEntries();

  it("labels every valid cell with its correlation at three decimals", () => {
    const ctx = new StubCtx();
    renderLandMatrix(ctx, g, entries, 3, RANGE, null);
    const texts = ctx.ops.filter((o) => o.op === "fillText").map((o) => o.text);
    const expected = entries.filter((e) => e.valid).map((e) => formatScore(e.ccf));
    expect(texts).toEqual(expected);
    expect(texts).toHaveLength(36 - INVALID_CELLS.length);
  });

  it("colors every valid cell by the anchored scale", () => {
    const ctx = new StubCtx();
    renderLandMatrix(ctx, g, entries, 3, RANGE, null);
    const fills = ctx.ops.filter((o) => o.op === "fillRect");
    expect(fills).toHaveLength(36);
    let k = 0;
    for (const e of entries) {
      const fill = fills[k] as Op;
      expect(fill.style).toBe(e.valid ? valueToColor(e.ccf, RANGE) : MISSING_COLOR);
      k += 1;
    }
  });

  it("outlines exactly the six in-phase cells for the pair's phase", () => {
    const ctx = new StubCtx();
    renderLandMatrix(ctx, g, entries, 3, RANGE, null);
    const outlines = ctx.ops.filter(
      (o) => o.op === "strokeRect" && o.style === PHASE_OUTLINE_COLOR,
    );
    expect(outlines).toHaveLength(6);
    const expectedCells: [number, number][] = [
      [1, 4],
      [2, 5],
      [3, 6],
      [4, 1],
      [5, 2],
      [6, 3],
    ];
    expectedCells.forEach(([i, j], k) => {
      const rect = tileRect(g, i - 1, j - 1);
      const outline = outlines[k] as Op;
      expect(outline.x).toBe(rect.x + 1);
      expect(outline.y).toBe(rect.y + 1);
    });
  });

  it("hatches invalid cells instead of labeling them", () => {
    const ctx = new StubCtx();
    renderLandMatrix(ctx, g, entries, 3, RANGE, null);
    const missingFills = ctx.ops.filter(
      (o) => o.op === "fillRect" && o.style === MISSING_COLOR,
    );
    expect(missingFills).toHaveLength(INVALID_CELLS.length);
    const texts = ctx.ops.filter((o) => o.op === "fillText").map((o) => o.text);
    expect(texts).not.toContain("—");
  });

  it("marks the selected cell", () => {
    const ctx = new StubCtx();
    renderLandMatrix(ctx, g, entries, 3, RANGE, [2, 5]);
    const rect = tileRect(g, 1, 4);
    const selected = ctx.ops.filter((o) => o.op === "strokeRect" && o.style === SELECT_COLOR);
    expect(selected).toHaveLength(1);
    expect((selected[0] as Op).x).toBe(rect.x);
  });
});

describe("score matrix rendering", () => {
  const order = SCORES_PAYLOAD.bullets.map((b) => b.bullet_id);
  const index = new ScoreIndex(SCORES_PAYLOAD.scores);
  const g = gridGeometry(order.length, 300, 300, 40);

  it("colors every tile by its pair's score on the anchored scale", () => {
    const ctx = new StubCtx();
    renderScoreMatrix(ctx, g, order, index, RANGE, null);
    const fills = ctx.ops.filter((o) => o.op === "fillRect");
    expect(fills).toHaveLength(order.length * order.length);
    let k = 0;
    for (const rowId of order) {
      for (const colId of order) {
        const score = index.get(rowId, colId);
        const expected =
          score === null ? MISSING_COLOR : valueToColor(score.ccf_diff, RANGE);
        expect((fills[k] as Op).style).toBe(expected);
        k += 1;
      }
    }
  });

  it("outlines the selected pair's tile", () => {
    const ctx = new StubCtx();
    renderScoreMatrix(ctx, g, order, index, RANGE, ["B11", "B50"]);
    const rect = tileRect(g, order.indexOf("B11"), order.indexOf("B50"));
    const selected = ctx.ops.filter((o) => o.op === "strokeRect" && o.style === SELECT_COLOR);
    expect(selected).toHaveLength(1);
    expect((selected[0] as Op).x).toBe(rect.x);
    expect((selected[0] as Op).y).toBe(rect.y);
  });

  it("builds hover tooltips from the exact score at three decimals", () => {
    const score = index.get("B11", "B12");
    expect(tileTooltip("B11", "B12", score?.ccf_diff ?? null)).toBe("B11 vs B12: 0.812");
    expect(tileTooltip("B11", "NOPE", null)).toBe("B11 vs NOPE: —");
  });
});

describe("variogram rendering", () => {
  it("draws one dot per point and the trend polyline verbatim", () => {
    const ctx = new StubCtx();
    const frame = chartFrame(760, 420, [0, 40], [0, 1]);
    renderVariogram(ctx, frame, ANALYSIS_PAYLOAD.variogram, null);
    const dots = ctx.ops.filter((o) => o.op === "arc");
    expect(dots).toHaveLength(ANALYSIS_PAYLOAD.variogram.points.length);
    ANALYSIS_PAYLOAD.variogram.points.forEach((p, k) => {
      expect((dots[k] as Op).x).toBeCloseTo(frame.x(p.distance), 9);
      expect((dots[k] as Op).y).toBeCloseTo(frame.y(p.score), 9);
    });
    const lastPath = ctx.ops.map((o) => o.op).lastIndexOf("beginPath");
    const trendOps = ctx.ops.slice(lastPath + 1).filter((o) => o.op === "moveTo" || o.op === "lineTo");
    const { xs, ys } = ANALYSIS_PAYLOAD.variogram.trend;
    expect(trendOps).toHaveLength(xs.length);
    trendOps.forEach((o, k) => {
      expect(o.op).toBe(k === 0 ? "moveTo" : "lineTo");
      expect(o.x).toBeCloseTo(frame.x(xs[k] as number), 9);
      expect(o.y).toBeCloseTo(frame.y(ys[k] as number), 9);
    });
    const strokes = ctx.ops.filter((o) => o.op === "stroke" && o.style === TREND_COLOR);
    expect(strokes).toHaveLength(1);
  });

  it("enlarges the highlighted point", () => {
    const ctx = new StubCtx();
    const frame = chartFrame(760, 420, [0, 40], [0, 1]);
    renderVariogram(ctx, frame, ANALYSIS_PAYLOAD.variogram, 2);
    const dots = ctx.ops.filter((o) => o.op === "arc");
    expect((dots[2] as Op).r).toBeGreaterThan((dots[0] as Op).r as number);
  });
});

describe("scatter rendering", () => {
  it("draws highlighted points with a ring", () => {
    const ctx = new StubCtx();
    const frame = chartFrame(760, 420, [0, 4], [0, 1]);
    const points = [
      { first: "B11", second: "B12", x: 0, y: 0.8, secondShot: 12 },
      { first: "B11", second: "B30", x: 0, y: 0.3, secondShot: 30 },
      { first: "B12", second: "B30", x: 1, y: 0.6, secondShot: 30 },
    ];
    renderScatter(ctx, frame, points, new Set([1, 2]));
    const arcs = ctx.ops.filter((o) => o.op === "arc");
    expect(arcs).toHaveLength(3 + 2);
    const rings = ctx.ops.filter((o) => o.op === "stroke" && o.style === HIGHLIGHT_COLOR);
    expect(rings).toHaveLength(2);
  });
});

describe("signal overlay rendering", () => {
  it("shifts the second trace and lifts the pen across masked samples", () => {
    const sig1 = { values: [1, 2, null, 4] as (number | null)[], x_inc: 2, flags: [] };
    const sig2 = { values: [5, 6] as (number | null)[], x_inc: 2, flags: [] };
    const model = signalOverlayModel(sig1, sig2, 3);
    expect(model.traces.shift).toBe(6);
    const ctx = new StubCtx();
    const frame = chartFrame(700, 200, model.xDomain, model.yDomain);
    renderSignalOverlay(ctx, frame, model.traces);
    const paths = ctx.ops.map((o) => o.op);
    const pathStarts = paths
      .map((op, k) => (op === "beginPath" ? k : -1))
      .filter((k) => k >= 0);
    expect(pathStarts.length).toBeGreaterThanOrEqual(3);
    const [, firstTrace, secondTrace] = pathStarts;
    const firstOps = ctx.ops.slice(firstTrace as number, secondTrace as number);
    expect(firstOps.filter((o) => o.op === "moveTo")).toHaveLength(2);
    const secondOps = ctx.ops.slice(secondTrace as number);
    const secondMove = secondOps.find((o) => o.op === "moveTo") as Op;
    expect(secondMove.x).toBeCloseTo(frame.x(6), 9);
  });
});

describe("thumbnail rendering", () => {
  it("paints every sample and the crosscut line at its y location", () => {
    const thumb = {
      heights: [
        [0, 1, 2, 3],
        [4, 5, null, 7],
        [8, 9, 10, 11],
      ] as (number | null)[][],
      x_inc: 10,
      y_inc: 25,
    };
    const ctx = new StubCtx();
    renderThumbnail(ctx, thumb, 37.5, 120, 60);
    const fills = ctx.ops.filter((o) => o.op === "fillRect");
    expect(fills).toHaveLength(12);
    const line = ctx.ops.filter((o) => o.op === "moveTo" || o.op === "lineTo").slice(-2);
    expect((line[0] as Op).y).toBeCloseTo((37.5 / 75) * 60, 9);
    expect((line[1] as Op).y).toBeCloseTo((37.5 / 75) * 60, 9);
    const strokes = ctx.ops.filter((o) => o.op === "stroke" && o.style === TREND_COLOR);
    expect(strokes).toHaveLength(1);
  });
});
