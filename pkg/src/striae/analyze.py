"""Second-order structure over a comparison set.

Scores become distances, distances become a complete-linkage dendrogram
with a deterministic leaf order, shot-number gaps become a variogram with
a robust local-regression trend, and per-bullet median scores are screened
for outliers two ways (quantile and MAD band).
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .compare import ComparisonSet
from .config import AnalyzeConfig
from .signal import InsufficientDataError, LoessParams, loess_smooth


@dataclass
class DistanceMatrix:
    ids: list
    matrix: np.ndarray                       # K×K, symmetric, zero diagonal
    flagged_pairs: set = dc_field(default_factory=set)  # unreliable (id_a, id_b)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        k = len(self.ids)
        if self.matrix.shape != (k, k):
            raise ValueError("matrix shape must match ids")


@dataclass
class Dendrogram:
    leaf_ids: list   # leaf node k is leaf_ids[k]
    merges: list     # (node_a, node_b, height); merge m creates node K+m

    def __post_init__(self):
        k = len(self.leaf_ids)
        if len(self.merges) != max(0, k - 1):
            raise ValueError(f"{k} leaves need {k - 1} merges, "
                             f"got {len(self.merges)}")
        heights = [h for _, _, h in self.merges]
        if any(b < a for a, b in zip(heights, heights[1:])):
            raise ValueError("merge heights must be non-decreasing")


@dataclass
class VariogramPoint:
    distance: int
    score: float
    bullet1_id: str
    bullet2_id: str


@dataclass
class TrendCurve:
    xs: list  # distances, strictly increasing
    ys: list  # fitted scores


@dataclass
class OutlierFlag:
    bullet_id: str
    median_score: float
    criteria: list  # fired criteria, stricter (lower threshold) first


@dataclass
class OutlierReport:
    flags: list               # OutlierFlag, ascending by median
    medians: dict             # bullet_id -> median off-diagonal score
    quantile_threshold: float
    mad_threshold: float


def score_to_distance(cset: ComparisonSet) -> DistanceMatrix:
    """d(i, j) = s_max − s(i, j), zero diagonal, unreliable pairs maxed out.

    s_max is the largest reliable score stored in the set (self-scores
    included). Pairs whose score is unreliable or undefined take the
    largest reliable distance and are flagged.
    """
    ids = list(cset.bullet_ids)
    k = len(ids)
    if k == 0:
        raise ValueError("empty comparison set")
    reliable = [s.ccf_diff for s in cset.scores.values()
                if not s.unreliable and s.ccf_diff is not None]
    if not reliable:
        raise ValueError("no reliable scores in the set")
    s_max = max(reliable)

    d = np.zeros((k, k))
    flagged = set()
    bad_pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            score = cset.get_score(ids[i], ids[j])
            if score.unreliable or score.ccf_diff is None:
                bad_pairs.append((i, j))
                flagged.add((ids[i], ids[j]))
            else:
                d[i, j] = d[j, i] = s_max - score.ccf_diff
    d_max = float(d.max())
    for i, j in bad_pairs:
        d[i, j] = d[j, i] = d_max
    return DistanceMatrix(ids=ids, matrix=d, flagged_pairs=flagged)


def complete_linkage(d: np.ndarray, leaf_ids: list | None = None) -> Dendrogram:
    """Agglomerate by smallest maximum pairwise distance.

    At each step the two clusters with the smallest inter-cluster distance
    (the max over member pairs) merge; ties go to the pair whose sorted
    (minimum-leaf-index, minimum-leaf-index) tuple is smallest. Cluster
    distances update by the max rule, which keeps merge heights monotone.
    """
    d = np.asarray(d, dtype=np.float64)
    k = d.shape[0]
    if d.shape != (k, k):
        raise ValueError("distance matrix must be square")
    if not np.allclose(d, d.T, atol=0.0, rtol=0.0, equal_nan=False):
        raise ValueError("distance matrix must be symmetric")
    if leaf_ids is None:
        leaf_ids = list(range(k))
    if len(leaf_ids) != k:
        raise ValueError("leaf_ids length must match matrix")

    min_leaf = {i: i for i in range(k)}
    dist = {(i, j): float(d[i, j]) for i in range(k) for j in range(i + 1, k)}
    active = list(range(k))
    merges = []
    next_node = k
    for _ in range(k - 1):
        best = None
        for a_pos in range(len(active)):
            for b_pos in range(a_pos + 1, len(active)):
                u, v = active[a_pos], active[b_pos]
                duv = dist[(min(u, v), max(u, v))]
                mu, mv = min_leaf[u], min_leaf[v]
                key = (duv, min(mu, mv), max(mu, mv))
                if best is None or key < best[0]:
                    best = (key, u, v)
        (height, _, _), u, v = best
        first, second = (u, v) if min_leaf[u] < min_leaf[v] else (v, u)
        merges.append((first, second, height))
        new = next_node
        next_node += 1
        for w in active:
            if w in (u, v):
                continue
            dw = max(dist[(min(u, w), max(u, w))],
                     dist[(min(v, w), max(v, w))])
            dist[(min(new, w), max(new, w))] = dw
        min_leaf[new] = min(min_leaf[u], min_leaf[v])
        active = [w for w in active if w not in (u, v)] + [new]
    return Dendrogram(leaf_ids=list(leaf_ids), merges=merges)


def leaf_order(dend: Dendrogram) -> list:
    """Depth-first dendrogram order; smaller-minimum-leaf child first.

    Merges already store that child first, so the order is a direct
    traversal. Every cluster occupies a contiguous run of the result.
    """
    k = len(dend.leaf_ids)
    if k == 0:
        return []

    def walk(node: int) -> list:
        if node < k:
            return [node]
        a, b, _ = dend.merges[node - k]
        return walk(a) + walk(b)

    root = k + len(dend.merges) - 1 if dend.merges else 0
    return [dend.leaf_ids[i] for i in walk(root)]


def variogram(cset: ComparisonSet, shot_numbers: dict,
              cfg: AnalyzeConfig | None = None) -> tuple:
    """Score vs shot-count separation, one point per unordered pair.

    Pairs at distance 0 (same shot number) and pairs without a defined
    score are omitted. The trend is the signal module's robust local
    regression over (distance, score), reported once per distinct distance.
    """
    cfg = cfg or AnalyzeConfig()
    missing = [b for b in cset.bullet_ids if b not in shot_numbers]
    if missing:
        raise ValueError(f"missing shot numbers for {missing}")
    ids = cset.bullet_ids
    points = []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            score = cset.get_score(ids[i], ids[j])
            if score.ccf_diff is None:
                continue
            distance = abs(shot_numbers[ids[i]] - shot_numbers[ids[j]])
            if distance == 0:
                continue
            points.append(VariogramPoint(distance=distance,
                                         score=score.ccf_diff,
                                         bullet1_id=ids[i],
                                         bullet2_id=ids[j]))
    points.sort(key=lambda p: (p.distance, p.bullet1_id, p.bullet2_id))
    if not points:
        return points, TrendCurve(xs=[], ys=[])

    xs = np.array([p.distance for p in points], dtype=np.float64)
    ys = np.array([p.score for p in points], dtype=np.float64)
    fitted = None
    for degree in range(cfg.trend_degree, 0, -1):
        params = LoessParams(span=cfg.trend_span, degree=degree,
                             robust_iterations=cfg.trend_robust_iterations)
        try:
            fitted = loess_smooth(xs, ys, params)
            break
        except InsufficientDataError:
            continue
    if fitted is None:  # too few points even for a line: flat trend
        fitted = np.full(len(xs), float(np.mean(ys)))
    trend_xs, trend_ys, seen = [], [], set()
    for x, f in zip(xs.tolist(), fitted.tolist()):
        if x not in seen:
            seen.add(x)
            trend_xs.append(x)
            trend_ys.append(f)
    return points, TrendCurve(xs=trend_xs, ys=trend_ys)


@dataclass
class AnalysisResult:
    dendrogram: Dendrogram
    leaf_order: list
    variogram_points: list
    trend: TrendCurve
    outliers: OutlierReport | None       # None when the set is too small
    distance_flags: list                 # unreliable pairs, sorted


def analyze_set(cset: ComparisonSet, shot_numbers: dict,
                cfg: AnalyzeConfig | None = None) -> AnalysisResult:
    """Run the full second-order analysis over one comparison set.

    Outlier screening needs at least 4 bullets and is skipped (None) below
    that; everything else runs for any non-empty set.
    """
    cfg = cfg or AnalyzeConfig()
    dmat = score_to_distance(cset)
    dend = complete_linkage(dmat.matrix, leaf_ids=dmat.ids)
    order = leaf_order(dend)
    points, trend = variogram(cset, shot_numbers, cfg)
    outliers = (flag_outliers(cset, cfg.outlier_quantile)
                if len(cset.bullet_ids) >= 4 else None)
    return AnalysisResult(dendrogram=dend, leaf_order=order,
                          variogram_points=points, trend=trend,
                          outliers=outliers,
                          distance_flags=sorted(dmat.flagged_pairs))


def flag_outliers(cset: ComparisonSet, quantile: float = 0.05) -> OutlierReport:
    """Flag bullets whose median same-set score is anomalously low.

    Two criteria over the per-bullet medians of off-diagonal scores: below
    the `quantile` quantile, or below median-of-medians − 3×MAD-of-medians.
    A bullet failing either is flagged, with every fired criterion recorded
    (stricter, i.e. lower-threshold, first). Flags sort ascending by median.
    """
    ids = cset.bullet_ids
    if len(ids) < 4:
        raise ValueError(f"outlier screening needs >= 4 bullets, got {len(ids)}")
    medians = {}
    for a in ids:
        vals = [cset.get_score(a, b).ccf_diff for b in ids
                if b != a and cset.get_score(a, b).ccf_diff is not None]
        if not vals:
            raise ValueError(f"bullet {a} has no defined pair scores")
        medians[a] = float(np.median(vals))

    med_arr = np.array([medians[a] for a in ids])
    q_thr = float(np.quantile(med_arr, quantile))
    center = float(np.median(med_arr))
    mad = float(np.median(np.abs(med_arr - center)))
    mad_thr = center - 3.0 * mad

    named = sorted([("quantile", q_thr), ("mad_band", mad_thr)],
                   key=lambda t: t[1])
    flags = []
    for a in ids:
        fired = [name for name, thr in named if medians[a] < thr]
        if fired:
            flags.append(OutlierFlag(bullet_id=a, median_score=medians[a],
                                     criteria=fired))
    flags.sort(key=lambda f: (f.median_score, f.bullet_id))
    return OutlierReport(flags=flags, medians=medians,
                         quantile_threshold=q_thr, mad_threshold=mad_thr)
