"""Scan ingestion: x3p/CSV parsing, downsampling, validation, manifests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from striae.scan_io import (HeightField, ManifestRow, ScanFormatError,
                            ScanMeta, ScanRecord, downsample, read_grid_csv,
                            read_manifest, read_x3p, validate, write_grid_csv,
                            write_manifest)

from conftest import make_x3p_bytes


class TestReadX3p:
    def test_unit_conversion_identity(self):
        heights_m = np.arange(6, dtype=np.float64).reshape(2, 3) * 1e-6
        blob = make_x3p_bytes(heights_m, 1e-6, 1e-6, dtype="<f8")
        fld, meta = read_x3p(blob)
        assert fld.n_cols == 3 and fld.n_rows == 2
        assert fld.x_inc == pytest.approx(1.0)
        assert fld.y_inc == pytest.approx(1.0)
        np.testing.assert_allclose(
            fld.heights, np.arange(6, dtype=np.float64).reshape(2, 3))
        assert fld.mask.all()
        assert isinstance(meta, dict)

    def test_unit_conversion_is_1e6_scaling(self, rng):
        heights_m = rng.normal(0, 1e-6, size=(4, 5))
        blob = make_x3p_bytes(heights_m, 0.645e-6, 12.5e-6, dtype="<f8")
        fld, _ = read_x3p(blob)
        np.testing.assert_allclose(fld.heights, heights_m * 1e6, rtol=1e-12)
        assert fld.x_inc == pytest.approx(0.645)
        assert fld.y_inc == pytest.approx(12.5)

    def test_float32_payload(self):
        heights_m = np.array([[1.5e-6, 2.5e-6]])
        blob = make_x3p_bytes(heights_m, 1e-6, 1e-6, dtype="<f4")
        fld, _ = read_x3p(blob)
        np.testing.assert_allclose(fld.heights, [[1.5, 2.5]])

    def test_nan_cell_masked(self):
        heights_m = np.arange(6, dtype=np.float64).reshape(2, 3) * 1e-6
        heights_m[1, 2] = np.nan
        blob = make_x3p_bytes(heights_m, 1e-6, 1e-6, dtype="<f8")
        fld, _ = read_x3p(blob)
        expected = np.ones((2, 3), dtype=bool)
        expected[1, 2] = False
        np.testing.assert_array_equal(fld.mask, expected)
        assert np.isnan(fld.heights[1, 2])

    def test_size_mismatch_names_sizes(self):
        heights_m = np.zeros((1, 99))
        blob = make_x3p_bytes(heights_m, 1e-6, 1e-6, dtype="<f8",
                              declared_shape=(100, 100))
        with pytest.raises(ScanFormatError) as exc:
            read_x3p(blob)
        msg = str(exc.value)
        assert "100" in msg and ("99" in msg or "792" in msg)

    def test_malformed_zip(self):
        with pytest.raises(ScanFormatError):
            read_x3p(b"this is not a zip archive")

    def test_missing_dimension_field_named(self):
        blob = make_x3p_bytes(np.zeros((2, 2)), 1e-6, 1e-6)
        import io
        import zipfile
        buf = io.BytesIO(blob)
        out = io.BytesIO()
        with zipfile.ZipFile(buf) as zin, zipfile.ZipFile(out, "w") as zout:
            for name in zin.namelist():
                data = zin.read(name)
                if name == "main.xml":
                    data = data.replace(b"<SizeY>2</SizeY>", b"")
                zout.writestr(name, data)
        with pytest.raises(ScanFormatError) as exc:
            read_x3p(out.getvalue())
        assert "SizeY" in str(exc.value)

    def test_unsupported_datatype(self):
        blob = make_x3p_bytes(np.zeros((2, 2)), 1e-6, 1e-6)
        import io
        import zipfile
        buf = io.BytesIO(blob)
        out = io.BytesIO()
        with zipfile.ZipFile(buf) as zin, zipfile.ZipFile(out, "w") as zout:
            for name in zin.namelist():
                data = zin.read(name)
                if name == "main.xml":
                    data = data.replace(b"<DataType>F</DataType>",
                                        b"<DataType>I</DataType>")
                zout.writestr(name, data)
        with pytest.raises(ScanFormatError) as exc:
            read_x3p(out.getvalue())
        assert "DataType" in str(exc.value) or "datatype" in str(exc.value)

    def test_opaque_metadata_carried(self):
        blob = make_x3p_bytes(np.zeros((2, 2)) , 1e-6, 1e-6,
                              extra_xml="<Instrument>ScopeX</Instrument>")
        _, meta = read_x3p(blob)
        assert any("ScopeX" in str(v) for v in meta.values())


class TestGridCsv:
    def test_basic_with_masked_cell(self, tmp_path):
        text = "x_inc=0.645,y_inc=0.645\n1,2\n3,\n"
        path = tmp_path / "grid.csv"
        path.write_text(text)
        fld = read_grid_csv(path)
        assert fld.n_rows == 2 and fld.n_cols == 2
        assert fld.heights[0, 0] == 1 and fld.heights[1, 0] == 3
        assert not fld.mask[1, 1]
        assert np.isnan(fld.heights[1, 1])
        assert fld.x_inc == pytest.approx(0.645)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("x_inc=1,y_inc=1\n1,2,3\n4,5\n")
        with pytest.raises(ScanFormatError) as exc:
            read_grid_csv(path)
        assert "3" in str(exc.value)  # line number of the short row

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("x_inc=1,y_inc=1\n1,spam\n")
        with pytest.raises(ScanFormatError):
            read_grid_csv(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("1,2\n3,4\n")
        with pytest.raises(ScanFormatError):
            read_grid_csv(path)

    def test_round_trip_identity(self, tmp_path, rng):
        heights = rng.normal(size=(6, 9))
        mask = rng.random((6, 9)) > 0.2
        heights = np.where(mask, heights, np.nan)
        fld = HeightField(heights=heights, mask=mask, x_inc=0.645, y_inc=12.5)
        path = tmp_path / "rt.csv"
        write_grid_csv(fld, path)
        back = read_grid_csv(path)
        np.testing.assert_array_equal(back.mask, fld.mask)
        np.testing.assert_array_equal(back.heights[mask], fld.heights[mask])
        assert back.x_inc == fld.x_inc and back.y_inc == fld.y_inc

    @settings(max_examples=25, deadline=None)
    @given(
        rows=st.integers(1, 6), cols=st.integers(1, 6),
        seed=st.integers(0, 2**31),
        x_inc=st.floats(0.01, 100, allow_nan=False),
    )
    def test_round_trip_property(self, tmp_path_factory, rows, cols, seed,
                                 x_inc):
        gen = np.random.default_rng(seed)
        heights = gen.normal(scale=10, size=(rows, cols))
        mask = gen.random((rows, cols)) > 0.3
        if not mask.any():
            mask[0, 0] = True
        heights = np.where(mask, heights, np.nan)
        fld = HeightField(heights=heights, mask=mask, x_inc=x_inc, y_inc=1.0)
        path = tmp_path_factory.mktemp("rt") / "grid.csv"
        write_grid_csv(fld, path)
        back = read_grid_csv(path)
        np.testing.assert_array_equal(back.mask, fld.mask)
        np.testing.assert_array_equal(back.heights[mask], fld.heights[mask])
        assert back.x_inc == fld.x_inc


class TestDownsample:
    def test_factor_one_identity(self, rng):
        heights = rng.normal(size=(4, 6))
        fld = HeightField(heights=heights, mask=np.ones((4, 6), bool),
                          x_inc=1.0, y_inc=2.0)
        out = downsample(fld, 1)
        np.testing.assert_array_equal(out.heights, heights)
        assert out.x_inc == 1.0 and out.y_inc == 2.0

    def test_mean_of_block(self):
        fld = HeightField(heights=np.array([[1.0, 2.0], [3.0, 4.0]]),
                          mask=np.ones((2, 2), bool), x_inc=1.0, y_inc=1.0)
        out = downsample(fld, 2)
        assert out.heights.shape == (1, 1)
        assert out.heights[0, 0] == 2.5
        assert out.x_inc == 2.0 and out.y_inc == 2.0

    def test_masked_mean(self):
        heights = np.array([[np.nan, np.nan], [np.nan, 7.0]])
        mask = np.array([[False, False], [False, True]])
        fld = HeightField(heights=heights, mask=mask, x_inc=1.0, y_inc=1.0)
        out = downsample(fld, 2)
        assert out.heights[0, 0] == 7.0
        assert out.mask[0, 0]

    def test_fully_masked_block(self):
        heights = np.full((2, 4), np.nan)
        heights[:, 2:] = 1.0
        mask = ~np.isnan(heights)
        fld = HeightField(heights=heights, mask=mask, x_inc=1.0, y_inc=1.0)
        out = downsample(fld, 2)
        assert not out.mask[0, 0]
        assert out.mask[0, 1]

    def test_ragged_edge_padding(self):
        # 3 columns at factor 2: last block holds a single column.
        heights = np.array([[1.0, 2.0, 10.0], [3.0, 4.0, 20.0]])
        fld = HeightField(heights=heights, mask=np.ones((2, 3), bool),
                          x_inc=1.0, y_inc=1.0)
        out = downsample(fld, 2)
        assert out.heights.shape == (1, 2)
        assert out.heights[0, 0] == 2.5
        assert out.heights[0, 1] == 15.0

    def test_factor_validation(self):
        fld = HeightField(heights=np.zeros((2, 2)),
                          mask=np.ones((2, 2), bool), x_inc=1.0, y_inc=1.0)
        with pytest.raises(ValueError):
            downsample(fld, 0)

    @settings(max_examples=25, deadline=None)
    @given(a=st.integers(1, 3), b=st.integers(1, 3), seed=st.integers(0, 999))
    def test_composition_property(self, a, b, seed):
        # downsample(downsample(f, a), b) == downsample(f, a*b) when a*b
        # divides both dimensions and nothing is masked.
        gen = np.random.default_rng(seed)
        n = a * b * 2
        heights = gen.normal(size=(n, n))
        fld = HeightField(heights=heights, mask=np.ones((n, n), bool),
                          x_inc=1.0, y_inc=1.0)
        once = downsample(fld, a * b)
        twice = downsample(downsample(fld, a), b)
        np.testing.assert_allclose(twice.heights, once.heights, atol=1e-12)
        assert twice.x_inc == once.x_inc


def _record(fraction, shape=(10, 100)):
    rows, cols = shape
    n = rows * cols
    n_measured = int(round(fraction * n))
    mask = np.zeros(n, dtype=bool)
    mask[:n_measured] = True
    mask = mask.reshape(rows, cols)
    heights = np.where(mask, 1.0, np.nan)
    fld = HeightField(heights=heights, mask=mask, x_inc=1.0, y_inc=1.0)
    meta = ScanMeta(barrel_id="A", shot_number=11, land_index=1,
                    source_path="mem")
    return ScanRecord(meta=meta, field=fld)


class TestValidate:
    def test_fully_measured_passes(self, default_config):
        rec = validate(_record(1.0), default_config.scan)
        assert not rec.excluded

    def test_half_masked_excluded_at_060(self, default_config):
        rec = validate(_record(0.5), default_config.scan)
        assert rec.excluded
        assert "0.5" in rec.reason

    def test_boundary_inclusive(self, default_config):
        cfg = default_config.scan
        cfg.min_measured_fraction = 0.5
        rec = validate(_record(0.5), cfg)
        assert not rec.excluded

    def test_small_dimensions_excluded(self, default_config):
        rec = validate(_record(1.0, shape=(2, 100)), default_config.scan)
        assert rec.excluded and "rows" in rec.reason

    def test_already_excluded_passthrough(self, default_config):
        rec = _record(1.0)
        rec.excluded, rec.reason = True, "operator call"
        out = validate(rec, default_config.scan)
        assert out.excluded and out.reason == "operator call"


class TestManifest:
    def test_round_trip(self, tmp_path):
        rows = [
            ManifestRow(path="a.csv", barrel_id="A", shot_number=11,
                        land_index=1),
            ManifestRow(path="b.csv", barrel_id="B", shot_number=12,
                        land_index=6, excluded=True, reason="damaged"),
            ManifestRow(path="c.csv", barrel_id="A", shot_number=50,
                        land_index=3, crosscut_y=125.0),
        ]
        path = tmp_path / "manifest.csv"
        write_manifest(rows, path)
        back = read_manifest(path)
        assert len(back) == 3
        assert back[0].path == "a.csv" and back[0].land_index == 1
        assert back[1].excluded and back[1].reason == "damaged"
        assert back[2].crosscut_y == 125.0
        assert back[0].bullet_id == "A11"

    def test_bad_land_index_rejected(self, tmp_path):
        path = tmp_path / "manifest.csv"
        path.write_text("path,barrel_id,shot_number,land_index,excluded,"
                        "reason\nx.csv,A,11,7,,\n")
        with pytest.raises(ScanFormatError):
            read_manifest(path)
