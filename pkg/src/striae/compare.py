"""Pairwise signal comparison.

The scoring chain: a lagged Pearson correlation over pairwise-complete
samples, maximized over a bounded lag window, evaluated for all 36 ordered
land pairings of two bullets, reduced to a single bullet-pair score as the
difference between the best cyclic phase's in-phase average and the
out-of-phase average.

Lag convention: corr_at_lag(x, y, k) pairs x[s+k] with y[s]; a positive k
means y's features occur later, and y is pulled back to meet x. The exact
shift y[s] = x[s+7] therefore correlates perfectly at k = +7.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import backend
from .config import CompareConfig
from .signal import Signal


class InsufficientOverlapError(ValueError):
    """Fewer pairwise-complete samples than the required minimum."""


class UndefinedCorrelationError(ValueError):
    """One side of the overlap is constant; correlation has no value."""


N_LANDS = 6


@dataclass
class LagSearchParams:
    max_lag: int = 500
    min_overlap: int | None = None  # None -> len(y) - max_lag at call time

    def __post_init__(self):
        if self.max_lag < 0:
            raise ValueError(f"max_lag must be >= 0, got {self.max_lag}")

    def resolve_min_overlap(self, n_y: int) -> int:
        if self.min_overlap is not None:
            return max(3, self.min_overlap)
        return max(3, n_y - self.max_lag)

    @classmethod
    def from_config(cls, cfg: CompareConfig) -> "LagSearchParams":
        return cls(max_lag=cfg.max_lag, min_overlap=cfg.min_overlap)


@dataclass
class LandPairResult:
    ccf: float | None
    lag: int | None
    overlap: int
    valid: bool

    @staticmethod
    def invalid() -> "LandPairResult":
        return LandPairResult(ccf=None, lag=None, overlap=0, valid=False)

    def mirrored(self) -> "LandPairResult":
        if not self.valid:
            return LandPairResult.invalid()
        return LandPairResult(ccf=self.ccf, lag=-self.lag,
                              overlap=self.overlap, valid=True)


@dataclass
class LandMatrix:
    bullet1_id: str
    bullet2_id: str
    entries: list  # 6x6 nested list of LandPairResult

    def __post_init__(self):
        if len(self.entries) != N_LANDS or any(
                len(row) != N_LANDS for row in self.entries):
            raise ValueError("entries must be 6x6")

    def mirrored(self) -> "LandMatrix":
        """The (b2, b1) view: transposed entries with negated lags."""
        flipped = [[self.entries[j][i].mirrored() for j in range(N_LANDS)]
                   for i in range(N_LANDS)]
        return LandMatrix(bullet1_id=self.bullet2_id,
                          bullet2_id=self.bullet1_id, entries=flipped)


@dataclass
class BulletScore:
    bullet1_id: str
    bullet2_id: str
    phase: int | None
    in_phase_avg: float | None
    out_phase_avg: float | None
    ccf_diff: float | None
    unreliable: bool
    n_in: int = 0
    n_out: int = 0
    partial: bool = False  # some land pairs invalid: averages use fewer terms

    def mirrored(self) -> "BulletScore":
        phase = None if self.phase is None else (N_LANDS - self.phase) % N_LANDS
        return BulletScore(
            bullet1_id=self.bullet2_id, bullet2_id=self.bullet1_id,
            phase=phase, in_phase_avg=self.in_phase_avg,
            out_phase_avg=self.out_phase_avg, ccf_diff=self.ccf_diff,
            unreliable=self.unreliable, n_in=self.n_in, n_out=self.n_out,
            partial=self.partial)


@dataclass
class Bullet:
    bullet_id: str
    lands: list  # 6 entries of Signal | None (None = excluded land)
    barrel_id: str = ""
    shot_number: int | None = None

    def __post_init__(self):
        if len(self.lands) != N_LANDS:
            raise ValueError(f"a bullet carries exactly {N_LANDS} lands")
        for land in self.lands:
            if land is not None and not isinstance(land, Signal):
                raise TypeError("lands must be Signal or None")


def _as_values(sig) -> np.ndarray:
    if isinstance(sig, Signal):
        return np.ascontiguousarray(sig.values, dtype=np.float64)
    return np.ascontiguousarray(np.asarray(sig, dtype=np.float64))


def corr_at_lag(x, y, k: int, params: LagSearchParams | None = None) -> float:
    """Pearson correlation of x[s+k] against y[s] over complete pairs.

    Raises InsufficientOverlapError when fewer than min_overlap pairs are
    complete, UndefinedCorrelationError when either side of the overlap is
    constant.
    """
    params = params or LagSearchParams()
    if abs(k) > params.max_lag:
        raise ValueError(f"|lag| {abs(k)} exceeds max_lag {params.max_lag}")
    xv, yv = _as_values(x), _as_values(y)
    min_overlap = params.resolve_min_overlap(len(yv))
    status, r, n = backend.corr_at_lag_kernel(xv, yv, k, min_overlap)
    if status == backend.STATUS_INSUFFICIENT_OVERLAP:
        raise InsufficientOverlapError(
            f"{n} complete pairs at lag {k}; need {min_overlap}")
    if status == backend.STATUS_UNDEFINED:
        raise UndefinedCorrelationError(
            f"constant overlap segment at lag {k}")
    return r


def ccf_max(x, y, params: LagSearchParams | None = None) -> LandPairResult:
    """Max correlation over k in [-max_lag, max_lag], with its lag.

    Ties go to the smallest |lag|, then to the negative lag. Never raises:
    an empty/degenerate search yields an invalid result.
    """
    params = params or LagSearchParams()
    if x is None or y is None:
        return LandPairResult.invalid()
    xv, yv = _as_values(x), _as_values(y)
    if len(xv) == 0 or len(yv) == 0:
        return LandPairResult.invalid()
    min_overlap = params.resolve_min_overlap(len(yv))
    status, r, lag, n = backend.lag_sweep_kernel(xv, yv, params.max_lag,
                                                 min_overlap)
    if status != backend.STATUS_OK:
        return LandPairResult.invalid()
    return LandPairResult(ccf=r, lag=int(lag), overlap=int(n), valid=True)


def align(x, y, lag: int, params: LagSearchParams | None = None):
    """Both signals on x's index axis with y shifted by lag.

    Returns (t, x_vals, y_vals): t are x-axis sample indices of the overlap,
    x_vals = x[t], y_vals = y[t - lag]. Masked samples stay NaN; the overlap
    is the index range where both signals are in range.
    """
    params = params or LagSearchParams()
    if abs(lag) > params.max_lag:
        raise ValueError(f"|lag| {abs(lag)} exceeds max_lag {params.max_lag}")
    xv, yv = _as_values(x), _as_values(y)
    t_lo = max(0, lag)
    t_hi = min(len(xv) - 1, len(yv) - 1 + lag)
    if t_hi < t_lo:
        raise ValueError(f"empty overlap at lag {lag} "
                         f"(lengths {len(xv)}, {len(yv)})")
    t = np.arange(t_lo, t_hi + 1)
    return t, xv[t], yv[t - lag]


def land_matrix(bullet1: Bullet, bullet2: Bullet,
                params: LagSearchParams | None = None) -> LandMatrix:
    """ccf_max for all 36 ordered land pairings; excluded lands invalid."""
    params = params or LagSearchParams()
    entries = [[ccf_max(bullet1.lands[i], bullet2.lands[j], params)
                for j in range(N_LANDS)] for i in range(N_LANDS)]
    return LandMatrix(bullet1_id=bullet1.bullet_id,
                      bullet2_id=bullet2.bullet_id, entries=entries)


def _phase_mean(m: LandMatrix, phase: int) -> tuple[float | None, int]:
    vals = []
    for i in range(N_LANDS):
        e = m.entries[i][(i + phase) % N_LANDS]
        if e.valid:
            vals.append(e.ccf)
    if not vals:
        return None, 0
    return math.fsum(vals) / len(vals), len(vals)


def best_phase(m: LandMatrix) -> int:
    """Cyclic offset maximizing the mean of valid in-phase entries.

    Phases without a single valid entry do not compete; ties go to the
    smallest offset. Raises if no phase has any valid entry.
    """
    best_p, best_mean = None, None
    for p in range(N_LANDS):
        mean, count = _phase_mean(m, p)
        if count == 0:
            continue
        if best_mean is None or mean > best_mean:
            best_p, best_mean = p, mean
    if best_p is None:
        raise UndefinedCorrelationError(
            f"no valid entries in any phase of {m.bullet1_id} vs {m.bullet2_id}")
    return best_p


def ccf_diff(m: LandMatrix, min_in_phase_valid: int = 3) -> BulletScore:
    """Bullet-pair score: in-phase average minus out-of-phase average.

    Averages run over valid entries only; when any of the 36 entries is
    invalid the score is marked partial. Fewer than min_in_phase_valid
    valid in-phase entries (or none out of phase) marks it unreliable.
    """
    phase = best_phase(m)
    in_vals, out_vals = [], []
    n_invalid = 0
    for i in range(N_LANDS):
        for j in range(N_LANDS):
            e = m.entries[i][j]
            if not e.valid:
                n_invalid += 1
                continue
            if j == (i + phase) % N_LANDS:
                in_vals.append(e.ccf)
            else:
                out_vals.append(e.ccf)
    in_avg = math.fsum(in_vals) / len(in_vals) if in_vals else None
    out_avg = math.fsum(out_vals) / len(out_vals) if out_vals else None
    diff = in_avg - out_avg if in_avg is not None and out_avg is not None else None
    unreliable = len(in_vals) < min_in_phase_valid or not out_vals
    return BulletScore(bullet1_id=m.bullet1_id, bullet2_id=m.bullet2_id,
                       phase=phase, in_phase_avg=in_avg, out_phase_avg=out_avg,
                       ccf_diff=diff, unreliable=unreliable,
                       n_in=len(in_vals), n_out=len(out_vals),
                       partial=n_invalid > 0)


@dataclass
class ComparisonSet:
    bullet_ids: list
    bullets: dict                      # id -> Bullet (signals retained)
    scores: dict                       # (id_a, id_b) a<=b in set order -> BulletScore
    matrices: dict                     # same key -> LandMatrix
    params: LagSearchParams = dc_field(default_factory=LagSearchParams)
    min_in_phase_valid: int = 3

    def _canon(self, a: str, b: str) -> tuple[str, str, bool]:
        ia, ib = self.bullet_ids.index(a), self.bullet_ids.index(b)
        if ia <= ib:
            return a, b, False
        return b, a, True

    def get_score(self, a: str, b: str) -> BulletScore:
        ka, kb, flipped = self._canon(a, b)
        score = self.scores[(ka, kb)]
        return score.mirrored() if flipped else score

    def get_matrix(self, a: str, b: str) -> LandMatrix:
        ka, kb, flipped = self._canon(a, b)
        m = self.matrices[(ka, kb)]
        return m.mirrored() if flipped else m

    def all_scores(self) -> list:
        """Stored scores (i <= j), in bullet order."""
        out = []
        for i, a in enumerate(self.bullet_ids):
            for b in self.bullet_ids[i:]:
                out.append(self.scores[(a, b)])
        return out


def _empty_score(a: str, b: str) -> BulletScore:
    return BulletScore(bullet1_id=a, bullet2_id=b, phase=None,
                       in_phase_avg=None, out_phase_avg=None, ccf_diff=None,
                       unreliable=True, n_in=0, n_out=0, partial=True)


def _score_pair(pair, bullets, params, min_in_phase_valid):
    a, b = pair
    m = land_matrix(bullets[a], bullets[b], params)
    try:
        score = ccf_diff(m, min_in_phase_valid)
    except UndefinedCorrelationError:
        # every entry invalid (e.g. all lands excluded on one side):
        # an unreliable placeholder keeps the set total and symmetric
        score = _empty_score(a, b)
    return pair, m, score


def compare_set(bullets: list, params: LagSearchParams | None = None,
                min_in_phase_valid: int = 3, workers: int = 1) -> ComparisonSet:
    """All unordered bullet pairs including self-comparisons.

    Results are keyed by pair, so the outcome does not depend on worker
    count or completion order.
    """
    params = params or LagSearchParams()
    ids = [b.bullet_id for b in bullets]
    if len(set(ids)) != len(ids):
        raise ValueError("bullet ids must be unique")
    by_id = {b.bullet_id: b for b in bullets}
    pairs = [(ids[i], ids[j]) for i in range(len(ids))
             for j in range(i, len(ids))]

    results = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for pair, m, score in pool.map(
                    lambda p: _score_pair(p, by_id, params, min_in_phase_valid),
                    pairs):
                results[pair] = (m, score)
    else:
        for pair in pairs:
            _, m, score = _score_pair(pair, by_id, params, min_in_phase_valid)
            results[pair] = (m, score)

    return ComparisonSet(
        bullet_ids=ids, bullets=by_id,
        scores={p: results[p][1] for p in pairs},
        matrices={p: results[p][0] for p in pairs},
        params=params, min_in_phase_valid=min_in_phase_valid)


def cross_set_compare(probe: Bullet, reference_set: list,
                      params: LagSearchParams | None = None,
                      min_in_phase_valid: int = 3) -> list:
    """Score the probe against each reference bullet, in reference order."""
    params = params or LagSearchParams()
    out = []
    for ref in reference_set:
        m = land_matrix(probe, ref, params)
        out.append(ccf_diff(m, min_in_phase_valid))
    return out


def substitute_bullets(cset: ComparisonSet, replacements: dict,
                       params: LagSearchParams | None = None) -> ComparisonSet:
    """Swap in new signals for named bullets and recompute only their pairs.

    Scores not touching a replaced bullet are carried over as the same
    objects, bit-identical. Unknown ids are an error.
    """
    unknown = set(replacements) - set(cset.bullet_ids)
    if unknown:
        raise KeyError(f"unknown bullet ids: {sorted(unknown)}")
    params = params or cset.params
    bullets = dict(cset.bullets)
    for bullet_id, lands in replacements.items():
        old = bullets[bullet_id]
        bullets[bullet_id] = Bullet(bullet_id=bullet_id, lands=list(lands),
                                    barrel_id=old.barrel_id,
                                    shot_number=old.shot_number)
    scores, matrices = dict(cset.scores), dict(cset.matrices)
    for (a, b) in cset.scores:
        if a in replacements or b in replacements:
            m = land_matrix(bullets[a], bullets[b], params)
            matrices[(a, b)] = m
            scores[(a, b)] = ccf_diff(m, cset.min_in_phase_valid)
    return ComparisonSet(bullet_ids=list(cset.bullet_ids), bullets=bullets,
                         scores=scores, matrices=matrices, params=params,
                         min_in_phase_valid=cset.min_in_phase_valid)
