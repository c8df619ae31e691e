"""Bundle assembly, canonical serialization, round-trips, payload views."""

import json

import numpy as np
import pytest

from striae.analyze import analyze_set
from striae.bundle import (Bundle, BundleError, BundleVersionError,
                           LandRecord, build_bundle, bundle_to_bytes,
                           land_record_from_json, read_bundle, score_from_json,
                           signal_from_json, signal_json, write_bundle)
from striae.compare import LagSearchParams, compare_set
from striae.config import AnalyzeConfig, PipelineConfig
from striae.scan_io import HeightField
from striae.signal import GrooveBounds, Signal
from striae.synthetic import make_bullet_set


def _thumbnail(gen):
    heights = gen.normal(size=(4, 8))
    return HeightField(heights=heights, mask=np.isfinite(heights),
                       x_inc=5.16, y_inc=100.0)


def build_two_bullet_state(seed=21, length=200):
    gen = np.random.default_rng(seed)
    bullets, _ = make_bullet_set(seed=seed, barrel_ids=["B"],
                                 shots_per_barrel=2, length=length,
                                 jitter=10)
    params = LagSearchParams(max_lag=30, min_overlap=120)
    cset = compare_set(bullets, params)
    analysis = analyze_set(cset, {"B11": 11, "B12": 12}, AnalyzeConfig())
    records = []
    for b in bullets:
        for li, sig in enumerate(b.lands, start=1):
            records.append(LandRecord(
                barrel_id=b.barrel_id, shot_number=b.shot_number,
                land_index=li, signal=sig,
                bounds=GrooveBounds(left_index=0,
                                    right_index=len(sig) - 1),
                thumbnail=_thumbnail(gen),
                scan_meta={"source_path": f"{b.bullet_id}_{li}.x3p"}))
    return records, cset, analysis


@pytest.fixture(scope="module")
def two_bullet_bundle():
    records, cset, analysis = build_two_bullet_state()
    return build_bundle(records, cset, analysis, PipelineConfig())


class TestQuantization:
    def test_nine_significant_digits(self):
        rec = LandRecord(barrel_id="Q", shot_number=11, land_index=1,
                         signal=Signal(values=np.array([0.123456789123456]),
                                       mask=np.array([True]), x_inc=1.0))
        bundle = build_bundle([rec])
        stored = bundle.data["lands"]["Q11"]["1"]["signal"]["values"][0]
        assert stored == float("0.123456789")

    def test_masked_values_null(self):
        values = np.array([1.0, np.nan, 3.0])
        sig = Signal(values=values, mask=np.isfinite(values), x_inc=1.0)
        rec = LandRecord(barrel_id="Q", shot_number=11, land_index=1,
                         signal=sig)
        bundle = build_bundle([rec])
        assert bundle.data["lands"]["Q11"]["1"]["signal"]["values"][1] is None

    def test_no_nan_in_serialized_form(self, two_bullet_bundle):
        raw = bundle_to_bytes(two_bullet_bundle)
        assert b"NaN" not in raw and b"Infinity" not in raw


class TestDeterminism:
    def test_rebuild_byte_identical(self):
        r1, c1, a1 = build_two_bullet_state(seed=33)
        r2, c2, a2 = build_two_bullet_state(seed=33)
        b1 = build_bundle(r1, c1, a1, PipelineConfig())
        b2 = build_bundle(r2, c2, a2, PipelineConfig())
        assert bundle_to_bytes(b1) == bundle_to_bytes(b2)

    def test_canonical_key_order(self, two_bullet_bundle):
        raw = bundle_to_bytes(two_bullet_bundle)
        parsed = json.loads(raw)
        assert list(parsed) == sorted(parsed)


class TestCounting:
    def test_two_bullet_shape(self, two_bullet_bundle):
        data = two_bullet_bundle.data
        assert [b["bullet_id"] for b in data["manifest"]["bullets"]] == \
            ["B11", "B12"]
        assert len(data["pairs"]) == 3  # 1 pair + 2 self
        n_signals = sum(1 for bid in data["lands"]
                        for land in data["lands"][bid].values()
                        if land["signal"] is not None)
        assert n_signals == 12
        for pair in data["pairs"]:
            assert len(pair["lands"]) == 36

    def test_dangling_score_reference(self):
        records, cset, _ = build_two_bullet_state()
        short = [r for r in records if r.bullet_id == "B11"]
        with pytest.raises(BundleError) as exc:
            build_bundle(short, cset)
        assert "B12" in str(exc.value)

    def test_duplicate_land_rejected(self):
        records, _, _ = build_two_bullet_state()
        with pytest.raises(BundleError):
            build_bundle(records + [records[0]])


class TestRoundTrip:
    def test_write_read_identity(self, two_bullet_bundle, tmp_path):
        path = tmp_path / "b.json"
        write_bundle(two_bullet_bundle, path)
        back = read_bundle(path)
        assert back.data == two_bullet_bundle.data
        assert bundle_to_bytes(back) == bundle_to_bytes(two_bullet_bundle)

    def test_truncated_file_names_offset(self, two_bullet_bundle, tmp_path):
        path = tmp_path / "b.json"
        write_bundle(two_bullet_bundle, path)
        raw = path.read_bytes()
        cut = len(raw) // 2
        path.write_bytes(raw[:cut])
        with pytest.raises(BundleError) as exc:
            read_bundle(path)
        assert "byte" in str(exc.value)
        assert any(ch.isdigit() for ch in str(exc.value))

    def test_future_schema_version(self, tmp_path):
        path = tmp_path / "future.json"
        path.write_text(json.dumps({"schema_version": 99, "manifest": {},
                                    "lands": {}, "pairs": []}))
        with pytest.raises(BundleVersionError) as exc:
            read_bundle(path)
        assert "99" in str(exc.value)

    def test_missing_section(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"schema_version": 1, "manifest": {}}))
        with pytest.raises(BundleError):
            read_bundle(path)

    def test_signal_reconstruction(self):
        values = np.array([1.25, np.nan, -0.5])
        sig = Signal(values=values, mask=np.isfinite(values), x_inc=0.645,
                     flags=["no_left_shoulder"])
        back = signal_from_json(json.loads(json.dumps(signal_json(sig))))
        np.testing.assert_array_equal(back.mask, sig.mask)
        np.testing.assert_array_equal(back.values[back.mask],
                                      sig.values[sig.mask])
        assert back.x_inc == 0.645
        assert back.flags == ["no_left_shoulder"]

    def test_land_record_reconstruction(self, two_bullet_bundle):
        payload = two_bullet_bundle.land_payload("B11", 3)
        rec = land_record_from_json(dict(payload, barrel_id="B",
                                         shot_number=11, land_index=3))
        assert rec.bullet_id == "B11"
        assert rec.signal is not None
        assert rec.thumbnail is not None


class TestPayloads:
    def test_pair_payload_contents(self, two_bullet_bundle):
        payload = two_bullet_bundle.pair_payload("B11", "B12")
        assert payload["bullet1"] == "B11" and payload["bullet2"] == "B12"
        assert len(payload["lands"]) == 36
        assert "B11" in payload["signals"] and "B12" in payload["signals"]
        stored = next(p for p in two_bullet_bundle.data["pairs"]
                      if p["bullet1"] == "B11" and p["bullet2"] == "B12")
        assert payload["score"] == stored["score"]

    def test_pair_payload_mirrored(self, two_bullet_bundle):
        fwd = two_bullet_bundle.pair_payload("B11", "B12")
        rev = two_bullet_bundle.pair_payload("B12", "B11")
        assert rev["bullet1"] == "B12"
        if fwd["score"]["phase"] is not None:
            assert rev["score"]["phase"] == (6 - fwd["score"]["phase"]) % 6
        assert rev["score"]["ccf_diff"] == fwd["score"]["ccf_diff"]
        fwd_by_ij = {(e["i"], e["j"]): e for e in fwd["lands"]}
        for e in rev["lands"]:
            mirror = fwd_by_ij[(e["j"], e["i"])]
            assert e["ccf"] == mirror["ccf"]
            if e["lag"] is not None:
                assert e["lag"] == -mirror["lag"]

    def test_unknown_pair_is_none(self, two_bullet_bundle):
        assert two_bullet_bundle.pair_payload("B11", "ZZ99") is None

    def test_scores_payload(self, two_bullet_bundle):
        payload = two_bullet_bundle.scores_payload()
        assert [b["bullet_id"] for b in payload["bullets"]] == ["B11", "B12"]
        assert len(payload["scores"]) == 3
        lo, hi = payload["score_range"]
        values = [s["ccf_diff"] for s in payload["scores"]
                  if s["ccf_diff"] is not None]
        assert lo == min(values) and hi == max(values)
        assert sorted(payload["leaf_order"]) == ["B11", "B12"]

    def test_land_payload(self, two_bullet_bundle):
        payload = two_bullet_bundle.land_payload("B12", 6)
        assert payload["signal"]["x_inc"] > 0
        assert payload["bounds"]["left_index"] == 0
        assert two_bullet_bundle.land_payload("B12", 9) is None

    def test_score_from_json_inverse(self, two_bullet_bundle):
        stored = two_bullet_bundle.data["pairs"][0]
        score = score_from_json(stored["score"], stored["bullet1"],
                                stored["bullet2"])
        assert score.ccf_diff == stored["score"]["ccf_diff"]
        assert score.unreliable == stored["score"]["unreliable_flag"]
