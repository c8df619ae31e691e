/**
 * DOM-free interaction core of the explorer.  It owns the view state and the
 * fetched payloads, funnels every interaction through the API client, and
 * notifies listeners after each change.  Fetch failures set an error banner
 * message while leaving the current view state untouched.
 */

import { ApiClient } from "./api.js";
import { landCellClickable, landEntryMap } from "./layout.js";
import {
  INITIAL_STATE,
  clearLand,
  clearPair,
  decodeHash,
  encodeHash,
  selectLand,
  selectPair,
  selectTab,
  type TabName,
  type ViewState,
} from "./state.js";
import type { AnalysisPayload, LandPayload, PairPayload, ScoresPayload } from "./types.js";

export interface LandDetail {
  first: LandPayload;
  second: LandPayload;
}

function messageOf(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

export class Explorer {
  state: ViewState = INITIAL_STATE;
  scores: ScoresPayload | null = null;
  analysis: AnalysisPayload | null = null;
  pairData: PairPayload | null = null;
  landDetail: LandDetail | null = null;
  /** Banner message after a failed fetch; null when everything is healthy. */
  error: string | null = null;

  private readonly listeners: (() => void)[] = [];

  constructor(readonly api: ApiClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  /** Load the overview payloads the matrix and chart views are built from. */
  async load(): Promise<void> {
    try {
      const [scores, analysis] = await Promise.all([this.api.scores(), this.api.analysis()]);
      this.scores = scores;
      this.analysis = analysis;
      this.error = null;
    } catch (err) {
      this.error = messageOf(err);
    }
    this.emit();
  }

  setTab(tab: TabName): void {
    this.state = selectTab(this.state, tab);
    this.emit();
  }

  /**
   * Drill into a bullet pair: one request for the pair payload, then the
   * land matrix opens.  On failure the previous selection stays in place.
   */
  async selectPair(bullet1: string, bullet2: string): Promise<void> {
    try {
      const data = await this.api.pair(bullet1, bullet2);
      this.state = selectPair(this.state, bullet1, bullet2);
      this.pairData = data;
      this.landDetail = null;
      this.error = null;
    } catch (err) {
      this.error = messageOf(err);
    }
    this.emit();
  }

  /**
   * Drill into a land cell of the open pair.  Invalid cells do not respond.
   * Fetches the two land payloads (one per bullet) for the detail view.
   */
  async selectLandCell(i: number, j: number): Promise<void> {
    if (this.state.pair === null || this.pairData === null) {
      return;
    }
    const entry = landEntryMap(this.pairData.lands).get(`${i},${j}`);
    if (entry === undefined || !landCellClickable(entry)) {
      return;
    }
    const [bullet1, bullet2] = this.state.pair;
    try {
      const [first, second] = await Promise.all([
        this.api.land(bullet1, i),
        this.api.land(bullet2, j),
      ]);
      this.state = selectLand(this.state, i, j);
      this.landDetail = { first, second };
      this.error = null;
    } catch (err) {
      this.error = messageOf(err);
    }
    this.emit();
  }

  closePair(): void {
    this.state = clearPair(this.state);
    this.pairData = null;
    this.landDetail = null;
    this.emit();
  }

  closeLand(): void {
    this.state = clearLand(this.state);
    this.landDetail = null;
    this.emit();
  }

  dismissError(): void {
    this.error = null;
    this.emit();
  }

  /** Deep link for the current state. */
  hash(): string {
    return encodeHash(this.state);
  }

  /** Restore a deep link, re-fetching whatever the target state needs. */
  async applyHash(hash: string): Promise<void> {
    const target = decodeHash(hash);
    this.state = { ...this.state, tab: target.tab };
    if (target.pair === null) {
      this.state = clearPair(this.state);
      this.pairData = null;
      this.landDetail = null;
      this.emit();
      return;
    }
    await this.selectPair(target.pair[0], target.pair[1]);
    const pairApplied =
      this.state.pair !== null &&
      this.state.pair[0] === target.pair[0] &&
      this.state.pair[1] === target.pair[1];
    if (target.land !== null && pairApplied) {
      await this.selectLandCell(target.land[0], target.land[1]);
    }
  }
}
