/**
 * View state for the explorer and its hash-fragment deep-link encoding.
 *
 * The state forms a hierarchy: a land-cell selection is only meaningful
 * inside a selected bullet pair, and transitions enforce that invariant.
 */

export const TABS = ["original", "clustered", "scatterplot", "lineplot", "variogram"] as const;
export type TabName = (typeof TABS)[number];

/** Tab labels as shown in the tab strip. */
export const TAB_LABELS: Record<TabName, string> = {
  original: "Original",
  clustered: "Clustered",
  scatterplot: "Scatterplot",
  lineplot: "Lineplot",
  variogram: "Variogram",
};

export interface ViewState {
  tab: TabName;
  /** Selected bullet pair, [first, second], or null. */
  pair: [string, string] | null;
  /** Selected land cell [i, j] (1-indexed), only valid with a pair selected. */
  land: [number, number] | null;
}

export const INITIAL_STATE: ViewState = { tab: "original", pair: null, land: null };

export function isTabName(name: string): name is TabName {
  return (TABS as readonly string[]).includes(name);
}

export function selectTab(state: ViewState, tab: TabName): ViewState {
  return { ...state, tab };
}

/** Selecting a pair resets any land selection from a previous pair. */
export function selectPair(state: ViewState, bullet1: string, bullet2: string): ViewState {
  return { ...state, pair: [bullet1, bullet2], land: null };
}

export function clearPair(state: ViewState): ViewState {
  return { ...state, pair: null, land: null };
}

/** A land cell can only be selected while a pair is selected. */
export function selectLand(state: ViewState, i: number, j: number): ViewState {
  if (state.pair === null) {
    throw new Error("cannot select a land cell without a selected bullet pair");
  }
  return { ...state, land: [i, j] };
}

export function clearLand(state: ViewState): ViewState {
  return { ...state, land: null };
}

/** Encode a view state as a location-hash deep link. */
export function encodeHash(state: ViewState): string {
  let hash = `#/tab/${state.tab}`;
  if (state.pair !== null) {
    hash += `/pair/${encodeURIComponent(state.pair[0])}/${encodeURIComponent(state.pair[1])}`;
    if (state.land !== null) {
      hash += `/land/${state.land[0]}/${state.land[1]}`;
    }
  }
  return hash;
}

/**
 * Decode a location hash back into a view state.  Unknown or malformed
 * fragments degrade gracefully: an unknown tab falls back to the first tab,
 * a land selection without a pair is dropped (it would violate the state
 * hierarchy), and non-numeric land indices are ignored.
 */
export function decodeHash(hash: string): ViewState {
  const state: ViewState = { ...INITIAL_STATE };
  const trimmed = hash.replace(/^#\/?/, "");
  if (trimmed === "") {
    return state;
  }
  const parts = trimmed.split("/");
  let k = 0;
  while (k < parts.length) {
    const key = parts[k];
    if (key === "tab" && k + 1 < parts.length) {
      const name = parts[k + 1] ?? "";
      if (isTabName(name)) {
        state.tab = name;
      }
      k += 2;
    } else if (key === "pair" && k + 2 < parts.length) {
      state.pair = [decodeURIComponent(parts[k + 1] ?? ""), decodeURIComponent(parts[k + 2] ?? "")];
      k += 3;
    } else if (key === "land" && k + 2 < parts.length) {
      const i = Number(parts[k + 1]);
      const j = Number(parts[k + 2]);
      if (state.pair !== null && Number.isInteger(i) && Number.isInteger(j)) {
        state.land = [i, j];
      }
      k += 3;
    } else {
      k += 1;
    }
  }
  return state;
}
