"""Surface-to-signal reduction.

A 2D height field becomes a 1D striation signal in four steps: pick a
crosscut row where adjacent profiles agree (the marks are stable), take a
band-median profile at that row, trim the groove shoulders found as
local-regression residual spikes in the outer quarters, and remove the
bullet's barrel curvature with a robust local regression, keeping the
residual.
"""

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import backend
from .config import CrosscutConfig, DetrendConfig, GrooveConfig
from .scan_io import HeightField, ScanMeta


class InsufficientDataError(ValueError):
    """Too few measured samples to run the requested operation."""


@dataclass
class Profile:
    y_location: float          # µm
    xs: np.ndarray             # µm, strictly increasing, uniform spacing
    heights: np.ndarray        # µm, NaN at masked samples
    mask: np.ndarray           # bool, True = measured
    x_inc: float               # µm between samples

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.float64)
        self.heights = np.asarray(self.heights, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if not (len(self.xs) == len(self.heights) == len(self.mask)):
            raise ValueError("xs, heights, mask must have equal length")
        if len(self.xs) > 1 and not np.all(np.diff(self.xs) > 0):
            raise ValueError("xs must be strictly increasing")

    def __len__(self) -> int:
        return len(self.xs)


@dataclass
class GrooveBounds:
    left_index: int
    right_index: int
    left_flagged: bool = False   # no left shoulder found; bound is profile end
    right_flagged: bool = False

    def __post_init__(self):
        if not 0 <= self.left_index < self.right_index:
            raise ValueError(
                f"need 0 <= left < right, got ({self.left_index}, {self.right_index})")


@dataclass
class LoessParams:
    span: float = 0.75
    degree: int = 2
    robust_iterations: int = 2

    def __post_init__(self):
        if not 0 < self.span <= 1:
            raise ValueError(f"span must be in (0, 1], got {self.span}")
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree}")
        if self.robust_iterations < 0:
            raise ValueError("robust_iterations must be >= 0")


@dataclass
class Signal:
    values: np.ndarray         # µm, detrended, NaN at masked samples
    mask: np.ndarray
    x_inc: float
    meta: ScanMeta | None = None
    y_location: float | None = None
    bounds: GrooveBounds | None = None
    flags: list = dc_field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.shape != self.mask.shape or self.values.ndim != 1:
            raise ValueError("values and mask must be equal-length 1D arrays")

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class CrosscutResult:
    y_location: float
    row_index: int
    fallback: bool = False   # no stable region; densest row used instead


def _row_profile(fld: HeightField, row: int) -> np.ndarray:
    return fld.heights[row]


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Correlation over pairwise-complete cells; NaN if undefined."""
    ok = np.isfinite(a) & np.isfinite(b)
    if ok.sum() < 2:
        return float("nan")
    av, bv = a[ok], b[ok]
    da, db = av - av.mean(), bv - bv.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        return float("nan")
    return float(da @ db) / denom


def select_crosscut(fld: HeightField, cfg: CrosscutConfig) -> CrosscutResult:
    """Find the lowest y whose profile stays stable for `window` steps.

    Candidate rows sit at multiples of cfg.step µm from the low-y edge
    (rounded to the nearest grid row). A candidate qualifies when the
    Pearson correlation between each of the next `window` adjacent
    candidate-profile pairs is at least cfg.stability_threshold and every
    row involved is at least cfg.min_row_fraction measured. If no candidate
    qualifies, the densest admissible row is returned with the fallback
    flag set.
    """
    fractions = fld.mask.mean(axis=1)
    admissible = fractions >= cfg.min_row_fraction
    if not admissible.any():
        raise InsufficientDataError(
            f"no row has measured fraction >= {cfg.min_row_fraction}")

    row_step = max(1, int(round(cfg.step / fld.y_inc)))
    candidate_rows = list(range(0, fld.n_rows, row_step))

    # corr_cache[i] = correlation between candidate i and candidate i+1
    corr_cache: dict[int, float] = {}

    def step_ok(i: int) -> bool:
        if i + 1 >= len(candidate_rows):
            return False
        r0, r1 = candidate_rows[i], candidate_rows[i + 1]
        if not (admissible[r0] and admissible[r1]):
            return False
        if i not in corr_cache:
            corr_cache[i] = _pearson(_row_profile(fld, r0), _row_profile(fld, r1))
        c = corr_cache[i]
        return math.isfinite(c) and c >= cfg.stability_threshold

    for i, row in enumerate(candidate_rows):
        if all(step_ok(i + j) for j in range(cfg.window)):
            return CrosscutResult(y_location=row * fld.y_inc, row_index=row)

    densest = int(np.argmax(np.where(admissible, fractions, -1.0)))
    return CrosscutResult(y_location=densest * fld.y_inc,
                          row_index=densest, fallback=True)


def extract_profile(fld: HeightField, y_location: float,
                    band_halfwidth: int = 2) -> Profile:
    """Per-column median over the band of rows centered at y_location."""
    row = int(round(y_location / fld.y_inc))
    if not 0 <= row < fld.n_rows:
        raise ValueError(
            f"y_location {y_location} µm maps to row {row}, "
            f"outside 0..{fld.n_rows - 1}")
    lo = max(0, row - band_halfwidth)
    hi = min(fld.n_rows, row + band_halfwidth + 1)
    band = fld.heights[lo:hi]
    counts = np.isfinite(band).sum(axis=0)
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        med = np.nanmedian(band, axis=0)
    heights = np.where(counts > 0, med, np.nan)
    xs = np.arange(fld.n_cols, dtype=np.float64) * fld.x_inc
    return Profile(y_location=row * fld.y_inc, xs=xs, heights=heights,
                   mask=counts > 0, x_inc=fld.x_inc)


def loess_smooth(xs, ys, params: LoessParams) -> np.ndarray:
    """Robust locally weighted regression; NaN marks masked samples.

    Each unmasked point gets a weighted least-squares polynomial fit of
    params.degree over its ceil(span × n) nearest unmasked neighbours,
    tricube weights scaled by the window radius. After the first fit,
    bisquare robustness weights computed from the residual median absolute
    deviation multiply the tricube weights, for params.robust_iterations
    rounds. Returns fitted values; masked positions stay NaN.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be equal-length 1D arrays")
    ok = np.isfinite(ys) & np.isfinite(xs)
    n = int(ok.sum())
    if n < params.degree + 1:
        raise InsufficientDataError(
            f"{n} measured points; degree {params.degree} needs "
            f"{params.degree + 1}")
    q = math.ceil(params.span * n)
    if q < params.degree + 1:
        raise InsufficientDataError(
            f"window of {q} points (span {params.span} of {n}) cannot fit "
            f"degree {params.degree}")

    order = np.argsort(xs[ok], kind="stable")
    sx = np.ascontiguousarray(xs[ok][order])
    sy = np.ascontiguousarray(ys[ok][order])

    delta = np.ones(n)
    fit = np.asarray(backend.loess_pass(sx, sy, q, params.degree, delta))
    for _ in range(params.robust_iterations):
        resid = sy - fit
        s = float(np.median(np.abs(resid)))
        if s == 0.0:
            break
        u = resid / (6.0 * s)
        delta = np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 2, 0.0)
        fit = np.asarray(backend.loess_pass(sx, sy, q, params.degree, delta))

    out = np.full(len(xs), np.nan)
    idx = np.flatnonzero(ok)[order]
    out[idx] = fit
    return out


def detect_grooves(profile: Profile, cfg: GrooveConfig) -> GrooveBounds:
    """Find shoulder cut points as residual spikes in the outer quarters.

    A full-span robust local fit tracks the gross profile shape; the
    shoulder threshold is the cfg.shoulder_quantile quantile of absolute
    residuals over the central 50% of samples. Within the left
    cfg.edge_fraction of the profile, the bound is one sample past the
    rightmost point whose (signed) residual exceeds the threshold —
    shoulders spike upward. Symmetric on the right. A side without a spike
    keeps the profile end and is flagged.
    """
    n = len(profile)
    n_ok = int(profile.mask.sum())
    if n_ok < cfg.min_unmasked:
        raise InsufficientDataError(
            f"{n_ok} measured samples; groove detection needs {cfg.min_unmasked}")
    params = LoessParams(span=cfg.span, degree=cfg.degree,
                         robust_iterations=cfg.robust_iterations)
    fitted = loess_smooth(profile.xs, profile.heights, params)
    resid = profile.heights - fitted

    mid = resid[int(n * 0.25):int(n * 0.75)]
    mid = mid[np.isfinite(mid)]
    if mid.size == 0:
        raise InsufficientDataError("central half of the profile is fully masked")
    threshold = float(np.quantile(np.abs(mid), cfg.shoulder_quantile))

    edge = int(n * cfg.edge_fraction)
    exceeding = np.flatnonzero(np.where(np.isfinite(resid), resid, -np.inf)
                               > threshold)

    left_hits = exceeding[exceeding < edge]
    if left_hits.size:
        left, left_flag = int(left_hits[-1]) + 1, False
    else:
        left, left_flag = 0, True

    right_hits = exceeding[exceeding >= n - edge]
    if right_hits.size:
        right, right_flag = int(right_hits[0]) - 1, False
    else:
        right, right_flag = n - 1, True

    if not left < right:
        raise InsufficientDataError(
            f"shoulder bounds ({left}, {right}) leave no interior")
    return GrooveBounds(left_index=left, right_index=right,
                        left_flagged=left_flag, right_flagged=right_flag)


def extract_signal(profile: Profile, bounds: GrooveBounds,
                   params: LoessParams, meta: ScanMeta | None = None) -> Signal:
    """Detrend the in-bounds profile: residual of a robust local fit.

    The residual is additionally centered on its unmasked mean, so the
    returned values sum to zero up to rounding regardless of edge-window
    asymmetry in the smooth.
    """
    lo, hi = bounds.left_index, bounds.right_index + 1
    if hi > len(profile):
        raise ValueError(f"bounds {bounds} exceed profile length {len(profile)}")
    xs = profile.xs[lo:hi]
    heights = profile.heights[lo:hi]
    mask = profile.mask[lo:hi]
    fitted = loess_smooth(xs, heights, params)
    values = heights - fitted
    measured = values[mask]
    if measured.size:
        values = values - math.fsum(measured.tolist()) / measured.size
    values = np.where(mask, values, np.nan)
    flags = []
    if bounds.left_flagged:
        flags.append("no_left_shoulder")
    if bounds.right_flagged:
        flags.append("no_right_shoulder")
    return Signal(values=values, mask=mask.copy(), x_inc=profile.x_inc,
                  meta=meta, y_location=profile.y_location, bounds=bounds,
                  flags=flags)
