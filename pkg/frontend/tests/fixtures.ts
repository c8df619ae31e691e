/** Shared fake API payloads and a fake fetch for the explorer tests. */

import type { FetchLike, FetchResponse } from "../src/api.js";
import type {
  AnalysisPayload,
  BulletInfo,
  BulletScore,
  LandEntry,
  LandPayload,
  PairPayload,
  ScoresPayload,
  SignalData,
} from "../src/types.js";

export const BULLET_IDS = ["B11", "B12", "B30", "B50"] as const;

function bullet(id: string, barrel: string, shot: number): BulletInfo {
  return {
    bullet_id: id,
    barrel_id: barrel,
    shot_number: shot,
    lands: Array.from({ length: 6 }, (_, k) => ({
      land_index: k + 1,
      excluded: false,
      reason: null,
    })),
  };
}

function score(
  b1: string,
  b2: string,
  ccfDiff: number,
  phase: number,
  inAvg: number,
  outAvg: number,
): BulletScore {
  return {
    bullet1: b1,
    bullet2: b2,
    phase,
    in_phase_avg: inAvg,
    out_phase_avg: outAvg,
    ccf_diff: ccfDiff,
    unreliable_flag: false,
    n_in: 6,
    n_out: 30,
    partial: false,
  };
}

export const CROSS_SCORES: BulletScore[] = [
  score("B11", "B12", 0.8124567, 3, 0.8512345, 0.0387778),
  score("B11", "B30", 0.3471234, 1, 0.4, 0.0528766),
  score("B11", "B50", 0.1298765, 5, 0.2, 0.0701235),
  score("B12", "B30", 0.6554321, 2, 0.7, 0.0445679),
  score("B12", "B50", 0.2017654, 0, 0.25, 0.0482346),
  score("B30", "B50", 0.4938271, 4, 0.55, 0.0561729),
];

export const SELF_SCORES: BulletScore[] = BULLET_IDS.map((id) =>
  score(id, id, 0.9412345, 0, 0.95, 0.05),
);

export const SCORES_PAYLOAD: ScoresPayload = {
  bullets: [bullet("B11", "A", 11), bullet("B12", "A", 12), bullet("B30", "B", 30), bullet("B50", "B", 50)],
  scores: [...SELF_SCORES, ...CROSS_SCORES],
  leaf_order: ["B12", "B11", "B50", "B30"],
  outliers: null,
  score_range: [0.05, 0.95],
};

export const ANALYSIS_PAYLOAD: AnalysisPayload = {
  dendrogram: {
    leaf_ids: ["B11", "B12", "B30", "B50"],
    merges: [
      [0, 1, 0.3],
      [2, 3, 0.6],
      [4, 5, 1.1],
    ],
  },
  leaf_order: ["B12", "B11", "B50", "B30"],
  variogram: {
    points: [
      { bullet1: "B11", bullet2: "B12", distance: 1, score: 0.8124567 },
      { bullet1: "B12", bullet2: "B50", distance: 38, score: 0.2017654 },
      { bullet1: "B11", bullet2: "B50", distance: 39, score: 0.1298765 },
      { bullet1: "B30", bullet2: "B50", distance: 20, score: 0.4938271 },
    ],
    trend: { xs: [1, 20, 38, 39], ys: [0.79, 0.48, 0.24, 0.21] },
  },
  outliers: null,
  distance_flags: [],
};

/** Cells of the fake 6 x 6 matrix that carry no valid correlation. */
export const INVALID_CELLS: [number, number][] = [
  [2, 3],
  [5, 1],
];

export function fakeLandEntries(): LandEntry[] {
  const entries: LandEntry[] = [];
  for (let i = 1; i <= 6; i++) {
    for (let j = 1; j <= 6; j++) {
      const invalid = INVALID_CELLS.some(([a, b]) => a === i && b === j);
      if (invalid) {
        entries.push({ i, j, ccf: null, lag: null, overlap: 0, valid: false });
      } else {
        entries.push({
          i,
          j,
          ccf: 0.1 + ((i * 7 + j * 3) % 80) / 100 + 0.0004321,
          lag: (i - j) * 4,
          overlap: 1800 - Math.abs(i - j) * 4,
          valid: true,
        });
      }
    }
  }
  return entries;
}

function fakeSignal(seed: number): SignalData {
  const values: (number | null)[] = Array.from({ length: 24 }, (_, t) =>
    Math.sin((t + seed) * 0.7) * 1.5,
  );
  values[5] = null;
  return { values, x_inc: 1.5625, flags: [] };
}

export function fakePairPayload(b1: string, b2: string): PairPayload {
  const signals: Record<string, Record<string, SignalData>> = { [b1]: {}, [b2]: {} };
  for (let k = 1; k <= 6; k++) {
    (signals[b1] as Record<string, SignalData>)[String(k)] = fakeSignal(k);
    (signals[b2] as Record<string, SignalData>)[String(k)] = fakeSignal(k + 10);
  }
  return {
    bullet1: b1,
    bullet2: b2,
    score: {
      phase: 3,
      in_phase_avg: 0.8512345,
      out_phase_avg: 0.0412345,
      ccf_diff: 0.8124567,
      unreliable_flag: false,
      n_in: 6,
      n_out: 28,
      partial: false,
    },
    lands: fakeLandEntries(),
    signals,
  };
}

export function fakeLandPayload(bulletId: string, landIndex: number): LandPayload {
  const heights: (number | null)[] = Array.from({ length: 30 }, (_, k) =>
    100 - Math.abs(k - 15) * 2,
  );
  heights[11] = null;
  return {
    bullet_id: bulletId,
    land_index: landIndex,
    excluded: false,
    reason: null,
    signal: fakeSignal(landIndex),
    profile: { heights, x_inc: 1.5625, y_location: 93.75 },
    bounds: { left_index: 4, right_index: 26, left_flagged: false, right_flagged: true },
    crosscut: { y_location: 93.75, row_index: 60, fallback: false },
    thumbnail: {
      heights: Array.from({ length: 8 }, (_, r) =>
        Array.from({ length: 12 }, (_, c) => ((r * 12 + c) % 40) / 4),
      ),
      x_inc: 12.5,
      y_inc: 25,
    },
    scan_meta: { source_path: `scans/${bulletId}_land${landIndex}.csv` },
  };
}

/** Default route table covering everything the controller tests exercise. */
export function defaultRoutes(): Map<string, unknown> {
  const routes = new Map<string, unknown>();
  routes.set("/api/scores", SCORES_PAYLOAD);
  routes.set("/api/analysis", ANALYSIS_PAYLOAD);
  routes.set("/api/manifest", { bullets: [] });
  for (const a of BULLET_IDS) {
    for (const b of BULLET_IDS) {
      routes.set(`/api/pair/${a}/${b}`, fakePairPayload(a, b));
    }
    for (let k = 1; k <= 6; k++) {
      routes.set(`/api/land/${a}/${k}`, fakeLandPayload(a, k));
    }
  }
  return routes;
}

/**
 * Fetch stub: answers from the route table (responses are deep-cloned),
 * returns 404 JSON errors for unknown paths, and 500s for paths listed in
 * `failing`.
 */
export function fakeFetch(
  routes: Map<string, unknown> = defaultRoutes(),
  failing: Set<string> = new Set(),
): FetchLike {
  return async (url: string): Promise<FetchResponse> => {
    if (failing.has(url)) {
      return { ok: false, status: 500, json: async () => ({ error: "synthetic failure" }) };
    }
    if (routes.has(url)) {
      const body = routes.get(url);
      return {
        ok: true,
        status: 200,
        json: async () => JSON.parse(JSON.stringify(body)) as unknown,
      };
    }
    return { ok: false, status: 404, json: async () => ({ error: `not found: ${url}` }) };
  };
}
