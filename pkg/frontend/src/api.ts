/**
 * Typed client for the bundle HTTP API.
 *
 * Every request is appended to `requestLog` (the path only), which lets
 * tests assert how many requests an interaction produced.  Concurrent
 * requests for the same path are coalesced into a single fetch.
 */

import type {
  AnalysisPayload,
  LandPayload,
  ManifestPayload,
  PairPayload,
  ScoresPayload,
} from "./types.js";

export interface FetchResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string) => Promise<FetchResponse>;

export class ApiError extends Error {
  constructor(
    readonly path: string,
    readonly status: number,
    detail?: string,
  ) {
    super(detail ? `${path}: ${detail}` : `${path}: request failed (HTTP ${status})`);
    this.name = "ApiError";
  }
}

export class ApiClient {
  /** Paths of every request issued, in order. */
  readonly requestLog: string[] = [];

  private readonly inflight = new Map<string, Promise<unknown>>();

  constructor(
    private readonly fetchImpl: FetchLike,
    private readonly base: string = "",
  ) {}

  private get<T>(path: string): Promise<T> {
    const existing = this.inflight.get(path);
    if (existing !== undefined) {
      return existing as Promise<T>;
    }
    this.requestLog.push(path);
    const request = this.fetchImpl(this.base + path)
      .then(async (resp) => {
        if (!resp.ok) {
          let detail: string | undefined;
          try {
            const body = (await resp.json()) as { error?: string };
            detail = typeof body.error === "string" ? body.error : undefined;
          } catch {
            detail = undefined;
          }
          throw new ApiError(path, resp.status, detail);
        }
        return (await resp.json()) as T;
      })
      .finally(() => {
        this.inflight.delete(path);
      });
    this.inflight.set(path, request);
    return request;
  }

  manifest(): Promise<ManifestPayload> {
    return this.get("/api/manifest");
  }

  scores(): Promise<ScoresPayload> {
    return this.get("/api/scores");
  }

  analysis(): Promise<AnalysisPayload> {
    return this.get("/api/analysis");
  }

  pair(bullet1: string, bullet2: string): Promise<PairPayload> {
    return this.get(`/api/pair/${encodeURIComponent(bullet1)}/${encodeURIComponent(bullet2)}`);
  }

  land(bulletId: string, landIndex: number): Promise<LandPayload> {
    return this.get(`/api/land/${encodeURIComponent(bulletId)}/${landIndex}`);
  }
}
