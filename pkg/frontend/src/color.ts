/**
 * Two-hue color scale for similarity values: low scores render in a neutral
 * grey, high scores in a warm orange.  The scale is anchored at the score
 * range published with the bundle so the Original and Clustered views share
 * identical coloring for the same value.
 */

export type Rgb = [number, number, number];

export const LOW_COLOR: Rgb = [70, 70, 70];
export const HIGH_COLOR: Rgb = [255, 140, 0];

/** Color used for cells that carry no value (missing / invalid). */
export const MISSING_COLOR = "rgb(24,24,24)";

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

/**
 * Normalized position of `value` inside `range`, clamped to [0, 1].
 * A degenerate range maps every value to the midpoint.
 */
export function normalize(value: number, range: [number, number]): number {
  const [lo, hi] = range;
  if (!(hi > lo)) {
    return 0.5;
  }
  const t = (value - lo) / (hi - lo);
  return Math.min(1, Math.max(0, t));
}

export function rgbAt(t: number): Rgb {
  return [
    Math.round(lerp(LOW_COLOR[0], HIGH_COLOR[0], t)),
    Math.round(lerp(LOW_COLOR[1], HIGH_COLOR[1], t)),
    Math.round(lerp(LOW_COLOR[2], HIGH_COLOR[2], t)),
  ];
}

/**
 * CSS color for a similarity value, anchored at the bundle-wide range.
 * `null` values (missing scores) get the dedicated missing color.
 */
export function valueToColor(value: number | null, range: [number, number]): string {
  if (value === null || Number.isNaN(value)) {
    return MISSING_COLOR;
  }
  const [r, g, b] = rgbAt(normalize(value, range));
  return `rgb(${r},${g},${b})`;
}

/** Display form of a score: exactly three decimals, em-dash when absent. */
export function formatScore(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) {
    return "—";
  }
  return value.toFixed(3);
}

/** Grey ramp for surface-height thumbnails (t in [0, 1]). */
export function heightToColor(t: number): string {
  const v = Math.round(lerp(30, 235, Math.min(1, Math.max(0, t))));
  return `rgb(${v},${v},${v})`;
}
