/**
 * Browser entry point: builds the DOM shell, wires events to the Explorer
 * controller, and repaints the canvases whenever the controller emits a
 * change.  All layout math and data handling live in the pure modules.
 */

import { ApiClient } from "./api.js";
import { formatScore, valueToColor, LOW_COLOR, HIGH_COLOR } from "./color.js";
import { Explorer } from "./controller.js";
import {
  ScoreIndex,
  gridGeometry,
  hoverHighlight,
  landEntryMap,
  linePolylines,
  matrixOrder,
  nearestPoint,
  scatterPoints,
  tileAt,
  type GridGeometry,
  type MatrixMode,
  type ScatterPoint,
} from "./layout.js";
import {
  chartFrame,
  renderDendrogram,
  renderLandMatrix,
  renderPolylines,
  renderProfile,
  renderScatter,
  renderScoreMatrix,
  renderSignalOverlay,
  renderThumbnail,
  renderVariogram,
  signalOverlayModel,
  tileTooltip,
  type ChartFrame,
  type Ctx2D,
} from "./render.js";
import { TABS, TAB_LABELS, type TabName } from "./state.js";
import type { BulletScore, LandPayload, VariogramPoint } from "./types.js";

const DEFAULT_RANGE: [number, number] = [0, 1];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function ctxOf(canvas: HTMLCanvasElement): Ctx2D {
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    throw new Error("canvas 2d context unavailable");
  }
  return ctx as unknown as Ctx2D;
}

interface ChartHit {
  frame: ChartFrame;
  pixels: { px: number; py: number }[];
  points: ScatterPoint[];
  varioPoints: VariogramPoint[];
}

class App {
  private readonly explorer: Explorer;
  private readonly tabButtons = new Map<TabName, HTMLButtonElement>();
  private readonly banner: HTMLDivElement;
  private readonly bannerText: HTMLSpanElement;
  private readonly tooltip: HTMLDivElement;
  private readonly matrixCanvas: HTMLCanvasElement;
  private readonly chartCanvas: HTMLCanvasElement;
  private readonly pairPanel: HTMLDivElement;
  private readonly pairTitle: HTMLDivElement;
  private readonly pairMeta: HTMLDivElement;
  private readonly landCanvas: HTMLCanvasElement;
  private readonly landPanel: HTMLDivElement;
  private readonly landTitle: HTMLDivElement;
  private readonly landMeta: HTMLDivElement;
  private readonly thumbCanvases: [HTMLCanvasElement, HTMLCanvasElement];
  private readonly profileCanvases: [HTMLCanvasElement, HTMLCanvasElement];
  private readonly thumbLabels: [HTMLDivElement, HTMLDivElement];
  private readonly overlayCanvas: HTMLCanvasElement;
  private readonly overlayCaption: HTMLDivElement;

  private matrixGrid: GridGeometry | null = null;
  private matrixIds: string[] = [];
  private landGrid: GridGeometry | null = null;
  private chartHit: ChartHit | null = null;
  private hoverTile: { row: number; col: number } | null = null;
  private hoverPoint: number | null = null;

  constructor(root: HTMLElement) {
    this.explorer = new Explorer(new ApiClient((url) => fetch(url)));

    const header = el("header");
    header.appendChild(el("h1", "", "Striae Explorer"));
    const tabStrip = el("nav", "tabs");
    for (const tab of TABS) {
      const button = el("button", "tab", TAB_LABELS[tab]);
      button.addEventListener("click", () => this.explorer.setTab(tab));
      this.tabButtons.set(tab, button);
      tabStrip.appendChild(button);
    }
    header.appendChild(tabStrip);
    root.appendChild(header);

    this.banner = el("div", "banner hidden");
    this.bannerText = el("span");
    this.banner.appendChild(this.bannerText);
    const dismiss = el("button", "dismiss", "dismiss");
    dismiss.addEventListener("click", () => this.explorer.dismissError());
    this.banner.appendChild(dismiss);
    root.appendChild(this.banner);

    const main = el("main");
    this.matrixCanvas = el("canvas", "view");
    this.chartCanvas = el("canvas", "view");
    main.appendChild(this.matrixCanvas);
    main.appendChild(this.chartCanvas);

    this.pairPanel = el("div", "panel hidden");
    const pairHead = el("div", "panel-head");
    this.pairTitle = el("div", "panel-title");
    const pairClose = el("button", "close", "close");
    pairClose.addEventListener("click", () => this.explorer.closePair());
    pairHead.appendChild(this.pairTitle);
    pairHead.appendChild(pairClose);
    this.pairPanel.appendChild(pairHead);
    this.pairMeta = el("div", "meta");
    this.pairPanel.appendChild(this.pairMeta);
    this.landCanvas = el("canvas");
    this.landCanvas.width = 380;
    this.landCanvas.height = 380;
    this.pairPanel.appendChild(this.landCanvas);
    main.appendChild(this.pairPanel);

    this.landPanel = el("div", "panel hidden");
    const landHead = el("div", "panel-head");
    this.landTitle = el("div", "panel-title");
    const landClose = el("button", "close", "close");
    landClose.addEventListener("click", () => this.explorer.closeLand());
    landHead.appendChild(this.landTitle);
    landHead.appendChild(landClose);
    this.landPanel.appendChild(landHead);
    this.landMeta = el("div", "meta");
    this.landPanel.appendChild(this.landMeta);
    const columns = el("div", "columns");
    const makeColumn = (): [HTMLDivElement, HTMLCanvasElement, HTMLCanvasElement, HTMLDivElement] => {
      const column = el("div", "column");
      const label = el("div", "caption");
      const thumb = el("canvas");
      thumb.width = 300;
      thumb.height = 150;
      const profile = el("canvas");
      profile.width = 300;
      profile.height = 150;
      column.appendChild(label);
      column.appendChild(thumb);
      column.appendChild(el("div", "caption", "profile + groove bounds"));
      column.appendChild(profile);
      columns.appendChild(column);
      return [column, thumb, profile, label];
    };
    const [, thumbA, profA, labelA] = makeColumn();
    const [, thumbB, profB, labelB] = makeColumn();
    this.thumbCanvases = [thumbA, thumbB];
    this.profileCanvases = [profA, profB];
    this.thumbLabels = [labelA, labelB];
    this.landPanel.appendChild(columns);
    this.overlayCaption = el("div", "caption");
    this.landPanel.appendChild(this.overlayCaption);
    this.overlayCanvas = el("canvas");
    this.overlayCanvas.width = 720;
    this.overlayCanvas.height = 200;
    this.landPanel.appendChild(this.overlayCanvas);
    main.appendChild(this.landPanel);

    root.appendChild(main);

    this.tooltip = el("div", "tooltip hidden");
    root.appendChild(this.tooltip);

    this.matrixCanvas.addEventListener("click", (ev) => this.onMatrixClick(ev));
    this.matrixCanvas.addEventListener("mousemove", (ev) => this.onMatrixHover(ev));
    this.matrixCanvas.addEventListener("mouseleave", () => this.clearHover());
    this.chartCanvas.addEventListener("click", (ev) => this.onChartClick(ev));
    this.chartCanvas.addEventListener("mousemove", (ev) => this.onChartHover(ev));
    this.chartCanvas.addEventListener("mouseleave", () => this.clearHover());
    this.landCanvas.addEventListener("click", (ev) => this.onLandMatrixClick(ev));

    window.addEventListener("hashchange", () => {
      if (window.location.hash !== this.explorer.hash()) {
        void this.explorer.applyHash(window.location.hash);
      }
    });

    this.explorer.onChange(() => this.render());
  }

  async start(): Promise<void> {
    await this.explorer.load();
    if (window.location.hash.length > 1) {
      await this.explorer.applyHash(window.location.hash);
    } else {
      this.render();
    }
  }

  private range(): [number, number] {
    return this.explorer.scores?.score_range ?? DEFAULT_RANGE;
  }

  private canvasPos(canvas: HTMLCanvasElement, ev: MouseEvent): { x: number; y: number } {
    const rect = canvas.getBoundingClientRect();
    return {
      x: ((ev.clientX - rect.left) / rect.width) * canvas.width,
      y: ((ev.clientY - rect.top) / rect.height) * canvas.height,
    };
  }

  private showTooltip(ev: MouseEvent, text: string): void {
    this.tooltip.textContent = text;
    this.tooltip.classList.remove("hidden");
    this.tooltip.style.left = `${ev.clientX + 12}px`;
    this.tooltip.style.top = `${ev.clientY + 12}px`;
  }

  private hideTooltip(): void {
    this.tooltip.classList.add("hidden");
  }

  private clearHover(): void {
    this.hideTooltip();
    if (this.hoverTile !== null || this.hoverPoint !== null) {
      this.hoverTile = null;
      this.hoverPoint = null;
      this.render();
    }
  }

  private onMatrixClick(ev: MouseEvent): void {
    if (this.matrixGrid === null) {
      return;
    }
    const { x, y } = this.canvasPos(this.matrixCanvas, ev);
    const hit = tileAt(this.matrixGrid, x, y);
    if (hit === null) {
      return;
    }
    const rowId = this.matrixIds[hit.row];
    const colId = this.matrixIds[hit.col];
    if (rowId !== undefined && colId !== undefined) {
      void this.explorer.selectPair(rowId, colId);
    }
  }

  private onMatrixHover(ev: MouseEvent): void {
    if (this.matrixGrid === null || this.explorer.scores === null) {
      return;
    }
    const { x, y } = this.canvasPos(this.matrixCanvas, ev);
    const hit = tileAt(this.matrixGrid, x, y);
    if (hit === null) {
      this.clearHover();
      return;
    }
    const changed =
      this.hoverTile === null || this.hoverTile.row !== hit.row || this.hoverTile.col !== hit.col;
    this.hoverTile = hit;
    const rowId = this.matrixIds[hit.row];
    const colId = this.matrixIds[hit.col];
    if (rowId !== undefined && colId !== undefined) {
      const score = new ScoreIndex(this.explorer.scores.scores).get(rowId, colId);
      this.showTooltip(ev, tileTooltip(rowId, colId, score?.ccf_diff ?? null));
    }
    if (changed) {
      this.render();
    }
  }

  private onLandMatrixClick(ev: MouseEvent): void {
    if (this.landGrid === null) {
      return;
    }
    const { x, y } = this.canvasPos(this.landCanvas, ev);
    const hit = tileAt(this.landGrid, x, y);
    if (hit !== null) {
      void this.explorer.selectLandCell(hit.row + 1, hit.col + 1);
    }
  }

  private onChartClick(ev: MouseEvent): void {
    if (this.chartHit === null) {
      return;
    }
    const { x, y } = this.canvasPos(this.chartCanvas, ev);
    const k = nearestPoint(this.chartHit.pixels, x, y, 12);
    if (k === null) {
      return;
    }
    const tab = this.explorer.state.tab;
    if (tab === "variogram") {
      const p = this.chartHit.varioPoints[k];
      if (p !== undefined) {
        void this.explorer.selectPair(p.bullet1, p.bullet2);
      }
    } else {
      const p = this.chartHit.points[k];
      if (p !== undefined) {
        void this.explorer.selectPair(p.first, p.second);
      }
    }
  }

  private onChartHover(ev: MouseEvent): void {
    if (this.chartHit === null) {
      return;
    }
    const { x, y } = this.canvasPos(this.chartCanvas, ev);
    const k = nearestPoint(this.chartHit.pixels, x, y, 12);
    if (k === this.hoverPoint && k !== null) {
      return;
    }
    this.hoverPoint = k;
    if (k === null) {
      this.hideTooltip();
    } else if (this.explorer.state.tab === "variogram") {
      const p = this.chartHit.varioPoints[k];
      if (p !== undefined) {
        this.showTooltip(
          ev,
          `${p.bullet1} vs ${p.bullet2}: ${formatScore(p.score)} (distance ${p.distance})`,
        );
      }
    } else {
      const p = this.chartHit.points[k];
      if (p !== undefined) {
        this.showTooltip(ev, `${p.first} vs ${p.second}: ${formatScore(p.y)}`);
      }
    }
    this.render();
  }

  private render(): void {
    const { explorer } = this;
    for (const [tab, button] of this.tabButtons) {
      button.classList.toggle("active", explorer.state.tab === tab);
    }
    if (explorer.error !== null) {
      this.bannerText.textContent = `Request failed: ${explorer.error}`;
      this.banner.classList.remove("hidden");
    } else {
      this.banner.classList.add("hidden");
    }

    const tab = explorer.state.tab;
    const matrixMode = tab === "original" || tab === "clustered";
    this.matrixCanvas.classList.toggle("hidden", !matrixMode);
    this.chartCanvas.classList.toggle("hidden", matrixMode);
    if (matrixMode) {
      this.renderMatrixView(tab as MatrixMode);
    } else {
      this.renderChartView(tab);
    }
    this.renderPairPanel();
    this.renderLandPanel();

    const hash = this.explorer.hash();
    if (window.location.hash !== hash) {
      window.location.hash = hash;
    }
  }

  private renderMatrixView(mode: MatrixMode): void {
    const scores = this.explorer.scores;
    if (scores === null) {
      return;
    }
    const bulletIds = scores.bullets.map((b) => b.bullet_id);
    const order = matrixOrder(bulletIds, mode, scores.leaf_order);
    this.matrixIds = order;
    const K = Math.max(1, order.length);
    const cell = Math.min(28, Math.max(9, Math.floor(560 / K)));
    const margin = 64;
    const dendroWidth = mode === "clustered" ? 130 : 0;
    this.matrixCanvas.width = margin + K * cell + dendroWidth + 10;
    this.matrixCanvas.height = margin + K * cell + 10;
    const ctx = ctxOf(this.matrixCanvas);
    ctx.clearRect(0, 0, this.matrixCanvas.width, this.matrixCanvas.height);
    const g = { n: K, originX: margin + dendroWidth, originY: margin, cell };
    this.matrixGrid = g;
    const index = new ScoreIndex(scores.scores);
    renderScoreMatrix(ctx, g, order, index, this.range(), this.explorer.state.pair);
    if (this.hoverTile !== null) {
      const rect = {
        x: g.originX + this.hoverTile.col * g.cell,
        y: g.originY + this.hoverTile.row * g.cell,
      };
      ctx.strokeStyle = "#4fc3f7";
      ctx.lineWidth = 1.5;
      ctx.strokeRect(rect.x, rect.y, g.cell - 1, g.cell - 1);
    }
    if (mode === "clustered" && this.explorer.analysis !== null) {
      const dend = this.explorer.analysis.dendrogram;
      const maxH = dend.merges.reduce((m, row) => Math.max(m, row[2]), 0) || 1;
      renderDendrogram(
        ctx,
        dend,
        order,
        (slot) => g.originY + slot * cell + cell / 2,
        (h) => margin + dendroWidth - 6 - (h / maxH) * (dendroWidth - 12),
      );
    }
    this.renderScaleLegend(ctx, margin + dendroWidth, 18);
  }

  private renderScaleLegend(ctx: Ctx2D, x0: number, y0: number): void {
    const [lo, hi] = this.range();
    const width = 140;
    for (let k = 0; k < width; k++) {
      ctx.fillStyle = valueToColor(lo + ((hi - lo) * k) / (width - 1), [lo, hi]);
      ctx.fillRect(x0 + k, y0, 1, 10);
    }
    ctx.fillStyle = "#aaaaaa";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "left";
    ctx.textBaseline = "middle";
    ctx.fillText(formatScore(lo), x0, y0 + 20);
    ctx.textAlign = "right";
    ctx.fillText(formatScore(hi), x0 + width, y0 + 20);
    void LOW_COLOR;
    void HIGH_COLOR;
  }

  private renderChartView(tab: TabName): void {
    const scores = this.explorer.scores;
    const analysis = this.explorer.analysis;
    if (scores === null) {
      return;
    }
    this.chartCanvas.width = 760;
    this.chartCanvas.height = 420;
    const ctx = ctxOf(this.chartCanvas);
    ctx.clearRect(0, 0, this.chartCanvas.width, this.chartCanvas.height);
    const bulletIds = scores.bullets.map((b) => b.bullet_id);
    const order = matrixOrder(bulletIds, "original", scores.leaf_order);
    const [lo, hi] = this.range();

    if (tab === "variogram") {
      if (analysis === null) {
        return;
      }
      const pts = analysis.variogram.points;
      const xs = pts.map((p) => p.distance).concat(analysis.variogram.trend.xs);
      const ys = pts.map((p) => p.score).concat(analysis.variogram.trend.ys);
      const frame = chartFrame(
        this.chartCanvas.width,
        this.chartCanvas.height,
        padded(minMax(xs, [0, 1])),
        padded(minMax(ys, [lo, hi])),
      );
      renderVariogram(ctx, frame, analysis.variogram, this.hoverPoint);
      this.chartHit = {
        frame,
        pixels: pts.map((p) => ({ px: frame.x(p.distance), py: frame.y(p.score) })),
        points: [],
        varioPoints: pts,
      };
      return;
    }

    const points = scatterPoints(scores.scores, scores.bullets, order);
    const frame = chartFrame(
      this.chartCanvas.width,
      this.chartCanvas.height,
      [-0.75, Math.max(1, order.length - 0.25)],
      padded([Math.min(lo, 0), Math.max(hi, 1)]),
    );
    const pixels = points.map((p) => ({ px: frame.x(p.x), py: frame.y(p.y) }));
    if (tab === "scatterplot") {
      const highlighted =
        this.hoverPoint !== null
          ? new Set(hoverHighlight(points, this.hoverPoint))
          : new Set<number>();
      renderScatter(ctx, frame, points, highlighted);
    } else {
      const shotOf = new Map(scores.bullets.map((b) => [b.bullet_id, b.shot_number]));
      renderPolylines(ctx, frame, linePolylines(points), (second) => shotOf.get(second) ?? 0);
    }
    ctx.fillStyle = "#888888";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "top";
    const step = Math.max(1, Math.ceil(order.length / 20));
    order.forEach((id, k) => {
      if (k % step === 0) {
        ctx.fillText(id, frame.x(k), this.chartCanvas.height - 30);
      }
    });
    this.chartHit = { frame, pixels, points, varioPoints: [] };
  }

  private renderPairPanel(): void {
    const pair = this.explorer.state.pair;
    const data = this.explorer.pairData;
    if (pair === null || data === null) {
      this.pairPanel.classList.add("hidden");
      this.landGrid = null;
      return;
    }
    this.pairPanel.classList.remove("hidden");
    this.pairTitle.textContent = `${data.bullet1} vs ${data.bullet2}`;
    const s = data.score;
    this.pairMeta.textContent =
      `score ${formatScore(s.ccf_diff)} · phase ${s.phase ?? "—"} · ` +
      `in-phase avg ${formatScore(s.in_phase_avg)} (${s.n_in}) · ` +
      `out-of-phase avg ${formatScore(s.out_phase_avg)} (${s.n_out})` +
      (s.unreliable_flag ? " · unreliable" : "") +
      (s.partial ? " · partial" : "");
    const margin = 30;
    const cell = Math.floor((this.landCanvas.width - margin - 8) / 6);
    const g = { n: 6, originX: margin, originY: margin, cell };
    this.landGrid = g;
    const ctx = ctxOf(this.landCanvas);
    ctx.clearRect(0, 0, this.landCanvas.width, this.landCanvas.height);
    ctx.fillStyle = "#aaaaaa";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    for (let k = 1; k <= 6; k++) {
      ctx.fillText(String(k), margin + (k - 0.5) * cell, margin - 12);
      ctx.textAlign = "right";
      ctx.fillText(String(k), margin - 6, margin + (k - 0.5) * cell);
      ctx.textAlign = "center";
    }
    renderLandMatrix(ctx, g, data.lands, s.phase, this.range(), this.explorer.state.land);
  }

  private renderLandPanel(): void {
    const detail = this.explorer.landDetail;
    const land = this.explorer.state.land;
    const data = this.explorer.pairData;
    if (detail === null || land === null || data === null) {
      this.landPanel.classList.add("hidden");
      return;
    }
    this.landPanel.classList.remove("hidden");
    const [i, j] = land;
    this.landTitle.textContent = `${data.bullet1} land ${i} vs ${data.bullet2} land ${j}`;
    const entry = landEntryMap(data.lands).get(`${i},${j}`);
    this.landMeta.textContent =
      entry !== undefined && entry.valid
        ? `correlation ${formatScore(entry.ccf)} at lag ${entry.lag} (overlap ${entry.overlap})`
        : "no valid correlation for this cell";

    const sides: [LandPayload, HTMLCanvasElement, HTMLCanvasElement, HTMLDivElement][] = [
      [detail.first, this.thumbCanvases[0], this.profileCanvases[0], this.thumbLabels[0]],
      [detail.second, this.thumbCanvases[1], this.profileCanvases[1], this.thumbLabels[1]],
    ];
    for (const [payload, thumbCanvas, profileCanvas, label] of sides) {
      label.textContent = `${payload.bullet_id} land ${payload.land_index}` +
        (payload.excluded ? ` (excluded: ${payload.reason ?? ""})` : "");
      const tctx = ctxOf(thumbCanvas);
      tctx.clearRect(0, 0, thumbCanvas.width, thumbCanvas.height);
      if (payload.thumbnail !== null) {
        renderThumbnail(
          tctx,
          payload.thumbnail,
          payload.crosscut?.y_location ?? null,
          thumbCanvas.width,
          thumbCanvas.height,
        );
      }
      const pctx = ctxOf(profileCanvas);
      pctx.clearRect(0, 0, profileCanvas.width, profileCanvas.height);
      if (payload.profile !== null) {
        const finite = payload.profile.heights.filter((v): v is number => v !== null);
        const frame = chartFrame(
          profileCanvas.width,
          profileCanvas.height,
          [0, Math.max(1, (payload.profile.heights.length - 1) * payload.profile.x_inc)],
          padded(minMax(finite, [0, 1])),
          32,
        );
        renderProfile(pctx, frame, payload.profile, payload.bounds);
      }
    }

    const octx = ctxOf(this.overlayCanvas);
    octx.clearRect(0, 0, this.overlayCanvas.width, this.overlayCanvas.height);
    const sig1 = data.signals[data.bullet1]?.[String(i)];
    const sig2 = data.signals[data.bullet2]?.[String(j)];
    if (sig1 !== undefined && sig2 !== undefined && entry !== undefined) {
      const model = signalOverlayModel(sig1, sig2, entry.lag);
      const frame = chartFrame(
        this.overlayCanvas.width,
        this.overlayCanvas.height,
        model.xDomain,
        padded(model.yDomain),
        32,
      );
      renderSignalOverlay(octx, frame, model.traces);
      this.overlayCaption.textContent =
        `aligned signals (second trace shifted ${model.traces.shift.toFixed(2)} µm)`;
    } else {
      this.overlayCaption.textContent = "no aligned signals for this cell";
    }
  }
}

function minMax(values: number[], fallback: [number, number]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (lo > hi) {
    return fallback;
  }
  if (lo === hi) {
    return [lo - 0.5, hi + 0.5];
  }
  return [lo, hi];
}

function padded([lo, hi]: [number, number]): [number, number] {
  const pad = (hi - lo) * 0.06 || 0.5;
  return [lo - pad, hi + pad];
}

const rootElement = document.getElementById("app");
if (rootElement !== null) {
  const app = new App(rootElement);
  void app.start();
}
