"""Shared fixtures and helpers for the test suite."""

import io
import zipfile

import numpy as np
import pytest

from striae.config import PipelineConfig


def make_x3p_bytes(heights_m, x_inc_m, y_inc_m, *, dtype="<f4",
                   data_name="bindata/data.bin", point_link=True,
                   declared_shape=None, extra_xml="") -> bytes:
    """Build a minimal x3p archive (zip with main.xml + binary payload).

    ``heights_m`` is a 2D array of heights in meters; NaN cells are written
    as IEEE NaN.  ``declared_shape`` lets a test lie about the matrix
    dimensions to trigger size-mismatch errors.
    """
    heights_m = np.asarray(heights_m, dtype=np.float64)
    rows, cols = declared_shape or heights_m.shape
    zdt = "F" if dtype == "<f4" else "D"
    link = (f"<DataLink><PointDataLink>{data_name}</PointDataLink>"
            "</DataLink>" if point_link else "")
    xml = f"""<?xml version="1.0"?>
<p:ISO5436_2 xmlns:p="http://www.opengps.eu/2008/ISO5436_2">
  <Record1>
    <Axes>
      <CX><AxisType>I</AxisType><DataType>D</DataType>
        <Increment>{x_inc_m!r}</Increment><Offset>0</Offset></CX>
      <CY><AxisType>I</AxisType><DataType>D</DataType>
        <Increment>{y_inc_m!r}</Increment><Offset>0</Offset></CY>
      <CZ><AxisType>A</AxisType><DataType>{zdt}</DataType>
        <Increment>1</Increment><Offset>0</Offset></CZ>
    </Axes>
  </Record1>
  <Record2><Date>2026-01-01T00:00:00</Date>{extra_xml}</Record2>
  <Record3>
    <MatrixDimension>
      <SizeX>{cols}</SizeX><SizeY>{rows}</SizeY><SizeZ>1</SizeZ>
    </MatrixDimension>
    {link}
  </Record3>
</p:ISO5436_2>
"""
    payload = heights_m.astype(dtype).tobytes()
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("main.xml", xml)
        zf.writestr(data_name, payload)
    return buf.getvalue()


@pytest.fixture
def default_config():
    return PipelineConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
