"""Single-file JSON bundle: every pipeline output in one versioned artifact.

The bundle holds the manifest, per-land signals/profiles/thumbnails,
per-pair scores with all 36 land entries, the analysis section, and the
full configuration snapshot. Floats are quantized to 9 significant digits
exactly once at build time and serialized canonically (sorted keys, no
whitespace), so identical inputs produce identical bytes. Aligned signal
views are never stored — they are reconstructed from (signal, signal, lag)
by any consumer.
"""

import json
from dataclasses import dataclass

import numpy as np

from .analyze import (AnalysisResult, Dendrogram, OutlierFlag, OutlierReport,
                      TrendCurve, VariogramPoint)
from .compare import (N_LANDS, BulletScore, ComparisonSet, LandMatrix,
                      LandPairResult)
from .config import PipelineConfig
from .scan_io import HeightField
from .signal import CrosscutResult, GrooveBounds, Profile, Signal

SCHEMA_VERSION = 1


class BundleError(ValueError):
    """Structurally invalid bundle content."""


class BundleVersionError(BundleError):
    """Bundle written by an unsupported schema version."""


@dataclass
class LandRecord:
    barrel_id: str
    shot_number: int
    land_index: int
    excluded: bool = False
    reason: str = ""
    signal: Signal | None = None
    profile: Profile | None = None
    bounds: GrooveBounds | None = None
    crosscut: CrosscutResult | None = None
    thumbnail: HeightField | None = None
    scan_meta: dict | None = None   # opaque source metadata, carried verbatim

    @property
    def bullet_id(self) -> str:
        return f"{self.barrel_id}{self.shot_number}"


def _quantize(obj):
    """Round every float to 9 significant digits; leave the rest alone."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _quantize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_quantize(v) for v in obj]
    raise TypeError(f"bundle cannot hold {type(obj).__name__}")


def _nullable_values(values: np.ndarray, mask: np.ndarray) -> list:
    return [float(v) if m else None for v, m in zip(values.tolist(),
                                                    mask.tolist())]


def signal_json(sig: Signal | None):
    if sig is None:
        return None
    return {
        "values": _nullable_values(sig.values, sig.mask),
        "x_inc": float(sig.x_inc),
        "flags": list(sig.flags),
    }


def profile_json(profile: Profile | None):
    if profile is None:
        return None
    return {
        "y_location": float(profile.y_location),
        "heights": _nullable_values(profile.heights, profile.mask),
        "x_inc": float(profile.x_inc),
    }


def bounds_json(bounds: GrooveBounds | None):
    if bounds is None:
        return None
    return {
        "left_index": bounds.left_index,
        "right_index": bounds.right_index,
        "left_flagged": bounds.left_flagged,
        "right_flagged": bounds.right_flagged,
    }


def crosscut_json(crosscut: CrosscutResult | None):
    if crosscut is None:
        return None
    return {
        "y_location": float(crosscut.y_location),
        "row_index": crosscut.row_index,
        "fallback": crosscut.fallback,
    }


def thumbnail_json(thumb: HeightField | None):
    if thumb is None:
        return None
    return {
        "heights": [_nullable_values(thumb.heights[r], thumb.mask[r])
                    for r in range(thumb.n_rows)],
        "x_inc": float(thumb.x_inc),
        "y_inc": float(thumb.y_inc),
    }


def score_json(score) -> dict:
    return {
        "phase": score.phase,
        "in_phase_avg": score.in_phase_avg,
        "out_phase_avg": score.out_phase_avg,
        "ccf_diff": score.ccf_diff,
        "unreliable_flag": score.unreliable,
        "n_in": score.n_in,
        "n_out": score.n_out,
        "partial": score.partial,
    }


def land_entries_json(matrix) -> list:
    out = []
    for i in range(N_LANDS):
        for j in range(N_LANDS):
            e = matrix.entries[i][j]
            out.append({"i": i + 1, "j": j + 1, "ccf": e.ccf, "lag": e.lag,
                        "overlap": e.overlap, "valid": e.valid})
    return out


def analysis_json(analysis: AnalysisResult | None):
    if analysis is None:
        return None
    outliers = None
    if analysis.outliers is not None:
        rep = analysis.outliers
        outliers = {
            "flags": [{"bullet_id": f.bullet_id,
                       "median_score": f.median_score,
                       "criteria": list(f.criteria)} for f in rep.flags],
            "medians": dict(rep.medians),
            "quantile_threshold": rep.quantile_threshold,
            "mad_threshold": rep.mad_threshold,
        }
    return {
        "dendrogram": {
            "leaf_ids": list(analysis.dendrogram.leaf_ids),
            "merges": [[a, b, h] for a, b, h in analysis.dendrogram.merges],
        },
        "leaf_order": list(analysis.leaf_order),
        "variogram": {
            "points": [{"distance": p.distance, "score": p.score,
                        "bullet1": p.bullet1_id, "bullet2": p.bullet2_id}
                       for p in analysis.variogram_points],
            "trend": {"xs": list(analysis.trend.xs),
                      "ys": list(analysis.trend.ys)},
        },
        "outliers": outliers,
        "distance_flags": [[a, b] for a, b in analysis.distance_flags],
    }


@dataclass
class Bundle:
    data: dict

    @property
    def schema_version(self) -> int:
        return self.data["schema_version"]

    @property
    def manifest(self) -> dict:
        return self.data["manifest"]

    @property
    def bullet_ids(self) -> list:
        return [b["bullet_id"] for b in self.manifest["bullets"]]

    def land_payload(self, bullet_id: str, land_index: int):
        lands = self.data["lands"].get(bullet_id)
        if lands is None:
            return None
        rec = lands.get(str(land_index))
        if rec is None:
            return None
        return {"bullet_id": bullet_id, "land_index": land_index, **rec}

    def _pair_record(self, b1: str, b2: str):
        for rec in self.data["pairs"]:
            if rec["bullet1"] == b1 and rec["bullet2"] == b2:
                return rec
        return None

    def pair_payload(self, b1: str, b2: str):
        """Stored pair or its mirror; None when either id is unknown."""
        rec = self._pair_record(b1, b2)
        if rec is not None:
            payload = dict(rec)
        else:
            stored = self._pair_record(b2, b1)
            if stored is None:
                return None
            score = dict(stored["score"])
            if score["phase"] is not None:
                score["phase"] = (N_LANDS - score["phase"]) % N_LANDS
            payload = {
                "bullet1": b1,
                "bullet2": b2,
                "score": score,
                "lands": [{"i": e["j"], "j": e["i"], "ccf": e["ccf"],
                           "lag": None if e["lag"] is None else -e["lag"],
                           "overlap": e["overlap"], "valid": e["valid"]}
                          for e in stored["lands"]],
            }
            payload["lands"].sort(key=lambda e: (e["i"], e["j"]))
        payload["signals"] = {
            b: {land: rec_land["signal"]
                for land, rec_land in self.data["lands"].get(b, {}).items()}
            for b in (b1, b2)
        }
        return payload

    def scores_payload(self) -> dict:
        scores = []
        defined = []
        for rec in self.data["pairs"]:
            entry = {"bullet1": rec["bullet1"], "bullet2": rec["bullet2"],
                     **rec["score"]}
            scores.append(entry)
            if rec["score"]["ccf_diff"] is not None:
                defined.append(rec["score"]["ccf_diff"])
        analysis = self.data.get("analysis")
        return {
            "bullets": self.manifest["bullets"],
            "scores": scores,
            "leaf_order": analysis["leaf_order"] if analysis else None,
            "outliers": analysis["outliers"] if analysis else None,
            "score_range": [min(defined), max(defined)] if defined else None,
        }

    def analysis_payload(self):
        return self.data.get("analysis")


def build_bundle(records: list, cset: ComparisonSet | None = None,
                 analysis: AnalysisResult | None = None,
                 config: PipelineConfig | None = None) -> Bundle:
    """Assemble and validate the bundle; floats quantized here, once.

    Every score must reference bullets present in the manifest built from
    `records`; a miss is a dangling-reference error.
    """
    by_bullet: dict = {}
    order: list = []
    for rec in records:
        bid = rec.bullet_id
        if bid not in by_bullet:
            by_bullet[bid] = {"barrel_id": rec.barrel_id,
                              "shot_number": rec.shot_number, "lands": {}}
            order.append(bid)
        if rec.land_index in by_bullet[bid]["lands"]:
            raise BundleError(
                f"duplicate land {rec.land_index} for bullet {bid}")
        by_bullet[bid]["lands"][rec.land_index] = rec

    manifest_bullets = []
    lands_section = {}
    for bid in order:
        info = by_bullet[bid]
        land_rows = []
        lands_json = {}
        for land_index in sorted(info["lands"]):
            rec = info["lands"][land_index]
            land_rows.append({"land_index": land_index,
                              "excluded": rec.excluded,
                              "reason": rec.reason})
            lands_json[str(land_index)] = {
                "excluded": rec.excluded,
                "reason": rec.reason,
                "signal": signal_json(rec.signal),
                "profile": profile_json(rec.profile),
                "bounds": bounds_json(rec.bounds),
                "crosscut": crosscut_json(rec.crosscut),
                "thumbnail": thumbnail_json(rec.thumbnail),
                "scan_meta": rec.scan_meta,
            }
        manifest_bullets.append({"bullet_id": bid,
                                 "barrel_id": info["barrel_id"],
                                 "shot_number": info["shot_number"],
                                 "lands": land_rows})
        lands_section[bid] = lands_json

    known = set(order)
    pairs = []
    if cset is not None:
        for i, a in enumerate(cset.bullet_ids):
            for b in cset.bullet_ids[i:]:
                if a not in known or b not in known:
                    missing = a if a not in known else b
                    raise BundleError(
                        f"score ({a}, {b}) references bullet {missing} "
                        "absent from the manifest")
                matrix = cset.matrices.get((a, b))
                if matrix is None:
                    raise BundleError(
                        f"pair ({a}, {b}) has no land matrix")
                pairs.append({
                    "bullet1": a,
                    "bullet2": b,
                    "score": score_json(cset.scores[(a, b)]),
                    "lands": land_entries_json(matrix),
                })

    if analysis is not None:
        for leaf in analysis.dendrogram.leaf_ids:
            if leaf not in known:
                raise BundleError(
                    f"analysis references bullet {leaf} absent from the manifest")

    data = {
        "schema_version": SCHEMA_VERSION,
        "config": config.snapshot() if config is not None else None,
        "manifest": {"bullets": manifest_bullets},
        "lands": lands_section,
        "pairs": pairs,
        "analysis": analysis_json(analysis),
    }
    return Bundle(data=_quantize(data))


def bundle_to_bytes(bundle: Bundle) -> bytes:
    return json.dumps(bundle.data, sort_keys=True, separators=(",", ":"),
                      allow_nan=False).encode("utf-8")


def write_bundle(bundle: Bundle, path) -> None:
    with open(path, "wb") as fh:
        fh.write(bundle_to_bytes(bundle))


def read_bundle(path) -> Bundle:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        data = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleError(
            f"{path}: malformed bundle JSON at byte {exc.pos}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict) or "schema_version" not in data:
        raise BundleError(f"{path}: missing schema_version")
    if data["schema_version"] != SCHEMA_VERSION:
        raise BundleVersionError(
            f"{path}: schema_version {data['schema_version']} is not "
            f"supported (this build reads version {SCHEMA_VERSION})")
    for section in ("manifest", "lands", "pairs"):
        if section not in data:
            raise BundleError(f"{path}: missing section {section!r}")
    return Bundle(data=data)


def _masked_array(values: list) -> tuple[np.ndarray, np.ndarray]:
    arr = np.array([np.nan if v is None else float(v) for v in values])
    return arr, np.array([v is not None for v in values], dtype=bool)


def signal_from_json(d) -> Signal | None:
    if d is None:
        return None
    values, mask = _masked_array(d["values"])
    return Signal(values=values, mask=mask, x_inc=d["x_inc"],
                  flags=list(d.get("flags", [])))


def profile_from_json(d) -> Profile | None:
    if d is None:
        return None
    heights, mask = _masked_array(d["heights"])
    xs = np.arange(len(heights), dtype=np.float64) * d["x_inc"]
    return Profile(y_location=d["y_location"], xs=xs, heights=heights,
                   mask=mask, x_inc=d["x_inc"])


def bounds_from_json(d) -> GrooveBounds | None:
    if d is None:
        return None
    return GrooveBounds(left_index=d["left_index"],
                        right_index=d["right_index"],
                        left_flagged=d["left_flagged"],
                        right_flagged=d["right_flagged"])


def crosscut_from_json(d) -> CrosscutResult | None:
    if d is None:
        return None
    return CrosscutResult(y_location=d["y_location"],
                          row_index=d["row_index"], fallback=d["fallback"])


def thumbnail_from_json(d) -> HeightField | None:
    if d is None:
        return None
    rows = [_masked_array(row) for row in d["heights"]]
    heights = np.array([r[0] for r in rows])
    mask = np.array([r[1] for r in rows])
    return HeightField(heights=heights, mask=mask,
                       x_inc=d["x_inc"], y_inc=d["y_inc"])


def land_record_from_json(d) -> LandRecord:
    """Inverse of the per-land JSON written by the signal stage."""
    return LandRecord(
        barrel_id=d["barrel_id"], shot_number=d["shot_number"],
        land_index=d["land_index"], excluded=d.get("excluded", False),
        reason=d.get("reason", ""),
        signal=signal_from_json(d.get("signal")),
        profile=profile_from_json(d.get("profile")),
        bounds=bounds_from_json(d.get("bounds")),
        crosscut=crosscut_from_json(d.get("crosscut")),
        thumbnail=thumbnail_from_json(d.get("thumbnail")),
        scan_meta=d.get("scan_meta"))


def score_from_json(d, bullet1_id: str, bullet2_id: str) -> BulletScore:
    return BulletScore(bullet1_id=bullet1_id, bullet2_id=bullet2_id,
                       phase=d["phase"], in_phase_avg=d["in_phase_avg"],
                       out_phase_avg=d["out_phase_avg"],
                       ccf_diff=d["ccf_diff"],
                       unreliable=d["unreliable_flag"],
                       n_in=d.get("n_in", 0), n_out=d.get("n_out", 0),
                       partial=d.get("partial", False))


def matrix_from_json(entries: list, bullet1_id: str,
                     bullet2_id: str) -> LandMatrix:
    grid = [[LandPairResult.invalid() for _ in range(N_LANDS)]
            for _ in range(N_LANDS)]
    for e in entries:
        grid[e["i"] - 1][e["j"] - 1] = LandPairResult(
            ccf=e["ccf"], lag=e["lag"], overlap=e["overlap"],
            valid=e["valid"])
    return LandMatrix(bullet1_id=bullet1_id, bullet2_id=bullet2_id,
                      entries=grid)


def analysis_from_json(d) -> AnalysisResult | None:
    if d is None:
        return None
    dend = Dendrogram(
        leaf_ids=list(d["dendrogram"]["leaf_ids"]),
        merges=[(a, b, h) for a, b, h in d["dendrogram"]["merges"]])
    points = [VariogramPoint(distance=p["distance"], score=p["score"],
                             bullet1_id=p["bullet1"], bullet2_id=p["bullet2"])
              for p in d["variogram"]["points"]]
    trend = TrendCurve(xs=list(d["variogram"]["trend"]["xs"]),
                       ys=list(d["variogram"]["trend"]["ys"]))
    outliers = None
    if d.get("outliers") is not None:
        rep = d["outliers"]
        outliers = OutlierReport(
            flags=[OutlierFlag(bullet_id=f["bullet_id"],
                               median_score=f["median_score"],
                               criteria=list(f["criteria"]))
                   for f in rep["flags"]],
            medians=dict(rep["medians"]),
            quantile_threshold=rep["quantile_threshold"],
            mad_threshold=rep["mad_threshold"])
    return AnalysisResult(
        dendrogram=dend, leaf_order=list(d["leaf_order"]),
        variogram_points=points, trend=trend, outliers=outliers,
        distance_flags=[tuple(pair) for pair in d.get("distance_flags", [])])
