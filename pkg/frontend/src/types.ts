/** Payload shapes returned by the bundle HTTP API. */

export interface LandStatus {
  land_index: number;
  excluded: boolean;
  reason: string | null;
}

export interface BulletInfo {
  bullet_id: string;
  barrel_id: string;
  shot_number: number;
  lands: LandStatus[];
}

/** One bullet-pair similarity score. */
export interface BulletScore {
  bullet1: string;
  bullet2: string;
  phase: number | null;
  in_phase_avg: number | null;
  out_phase_avg: number | null;
  ccf_diff: number | null;
  unreliable_flag: boolean;
  n_in: number;
  n_out: number;
  partial: boolean;
}

/** The score fields without the identifying pair (as embedded in pair payloads). */
export type ScoreBody = Omit<BulletScore, "bullet1" | "bullet2">;

export interface OutlierFlag {
  bullet_id: string;
  criteria: string[];
  median_score: number;
}

export interface OutlierReport {
  flags: OutlierFlag[];
  medians: Record<string, number>;
  quantile_threshold: number;
  mad_threshold: number;
}

export interface ScoresPayload {
  bullets: BulletInfo[];
  scores: BulletScore[];
  leaf_order: string[];
  outliers: OutlierReport | null;
  score_range: [number, number] | null;
}

/** One land-vs-land correlation entry inside a pair payload (i, j are 1-indexed). */
export interface LandEntry {
  i: number;
  j: number;
  ccf: number | null;
  lag: number | null;
  overlap: number;
  valid: boolean;
}

export interface SignalData {
  values: (number | null)[];
  x_inc: number;
  flags: string[];
}

export interface PairPayload {
  bullet1: string;
  bullet2: string;
  score: ScoreBody;
  lands: LandEntry[];
  signals: Record<string, Record<string, SignalData>>;
}

export interface ProfileData {
  heights: (number | null)[];
  x_inc: number;
  y_location: number;
}

export interface BoundsData {
  left_index: number;
  right_index: number;
  left_flagged: boolean;
  right_flagged: boolean;
}

export interface CrosscutData {
  y_location: number;
  row_index: number;
  fallback: boolean;
}

export interface ThumbnailData {
  heights: (number | null)[][];
  x_inc: number;
  y_inc: number;
}

export interface LandPayload {
  bullet_id: string;
  land_index: number;
  excluded: boolean;
  reason: string | null;
  signal: SignalData | null;
  profile: ProfileData | null;
  bounds: BoundsData | null;
  crosscut: CrosscutData | null;
  thumbnail: ThumbnailData | null;
  scan_meta: Record<string, unknown> | null;
}

export interface DendrogramData {
  leaf_ids: string[];
  merges: [number, number, number][];
}

export interface VariogramPoint {
  bullet1: string;
  bullet2: string;
  distance: number;
  score: number;
}

export interface VariogramData {
  points: VariogramPoint[];
  trend: { xs: number[]; ys: number[] };
}

export interface AnalysisPayload {
  dendrogram: DendrogramData;
  leaf_order: string[];
  variogram: VariogramData;
  outliers: OutlierReport | null;
  distance_flags: [string, string][];
}

export interface ManifestPayload {
  bullets: unknown[];
}
