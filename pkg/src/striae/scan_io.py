"""Scan ingestion: x3p-style containers, plain-text grids, thumbnails.

All geometry is converted to micrometers exactly once, here. Missing cells
are a first-class boolean mask (heights hold NaN at masked positions, the
mask is authoritative); downstream code never sees sentinel values.
"""

import csv
import io
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from xml.etree import ElementTree

import numpy as np

from .config import ScanConfig


class ScanFormatError(ValueError):
    """Malformed or contradictory scan container; message names the field."""


@dataclass
class HeightField:
    """A 2D surface height grid in µm; x varies along columns."""

    heights: np.ndarray  # float64 (n_rows, n_cols), NaN at masked cells
    mask: np.ndarray     # bool (n_rows, n_cols), True = measured
    x_inc: float         # µm per column
    y_inc: float         # µm per row

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.heights.ndim != 2 or self.mask.shape != self.heights.shape:
            raise ValueError("heights must be 2D and mask must match its shape")
        if not (self.x_inc > 0 and self.y_inc > 0):
            raise ValueError("increments must be positive")
        if not np.all(np.isfinite(self.heights[self.mask])):
            raise ValueError("unmasked cells must be finite")

    @property
    def n_rows(self) -> int:
        return self.heights.shape[0]

    @property
    def n_cols(self) -> int:
        return self.heights.shape[1]

    @property
    def measured_fraction(self) -> float:
        return float(self.mask.mean()) if self.mask.size else 0.0


@dataclass
class ScanMeta:
    barrel_id: str
    shot_number: int
    land_index: int
    source_path: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.land_index <= 6:
            raise ValueError(f"land_index must be 1..6, got {self.land_index}")

    @property
    def bullet_id(self) -> str:
        return f"{self.barrel_id}{self.shot_number}"


@dataclass
class ScanRecord:
    meta: ScanMeta
    field: HeightField | None
    excluded: bool = False
    reason: str = ""

    def __post_init__(self):
        if self.excluded and not self.reason:
            raise ValueError("excluded records must carry a reason")


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _flatten_xml(elem, prefix: str, out: dict) -> None:
    name = _local_name(elem.tag)
    path = f"{prefix}.{name}" if prefix else name
    text = (elem.text or "").strip()
    if text and len(list(elem)) == 0:
        out[path] = text
    for child in elem:
        _flatten_xml(child, path, out)


def _xml_find(root, *path_options):
    """First matching element text for any of the dotted local-name paths."""
    for dotted in path_options:
        parts = dotted.split("/")
        nodes = [root]
        for part in parts:
            nodes = [c for n in nodes for c in n if _local_name(c.tag) == part]
        for node in nodes:
            text = (node.text or "").strip()
            if text:
                return text
    return None


def read_x3p(path_or_bytes) -> tuple[HeightField, dict]:
    """Parse an x3p-style ZIP container into a HeightField plus metadata.

    Interprets only the grid dimensions, increments (meters), and datatype;
    every other XML leaf is carried through as an opaque dotted-path entry.
    Binary payload is little-endian IEEE-754, x varying fastest; values are
    meters and convert to µm. NaN cells become masked.
    """
    if isinstance(path_or_bytes, (bytes, bytearray)):
        blob = io.BytesIO(bytes(path_or_bytes))
        origin = "<bytes>"
    else:
        blob = str(path_or_bytes)
        origin = str(path_or_bytes)
    try:
        zf = zipfile.ZipFile(blob)
    except (zipfile.BadZipFile, OSError) as exc:
        raise ScanFormatError(f"{origin}: not a readable ZIP container ({exc})") from exc

    with zf:
        names = zf.namelist()
        xml_name = next((n for n in names if n.lower().endswith("main.xml")), None)
        if xml_name is None:
            raise ScanFormatError(f"{origin}: missing main.xml record")
        try:
            root = ElementTree.fromstring(zf.read(xml_name))
        except ElementTree.ParseError as exc:
            raise ScanFormatError(f"{origin}: main.xml is not well-formed ({exc})") from exc

        def require(field_name: str, *paths) -> str:
            value = _xml_find(root, *paths)
            if value is None:
                raise ScanFormatError(f"{origin}: missing XML field {field_name}")
            return value

        size_x = int(require("Record3/MatrixDimension/SizeX",
                             "Record3/MatrixDimension/SizeX"))
        size_y = int(require("Record3/MatrixDimension/SizeY",
                             "Record3/MatrixDimension/SizeY"))
        size_z_text = _xml_find(root, "Record3/MatrixDimension/SizeZ")
        if size_z_text is not None and int(size_z_text) != 1:
            raise ScanFormatError(
                f"{origin}: Record3/MatrixDimension/SizeZ must be 1, got {size_z_text}")
        inc_x_m = float(require("Record1/Axes/CX/Increment",
                                "Record1/Axes/CX/Increment"))
        inc_y_m = float(require("Record1/Axes/CY/Increment",
                                "Record1/Axes/CY/Increment"))
        datatype = (_xml_find(root, "Record1/Axes/CZ/DataType") or "F").upper()
        if datatype not in ("F", "D"):
            raise ScanFormatError(
                f"{origin}: unsupported Record1/Axes/CZ/DataType {datatype!r} "
                "(expected F for float32 or D for float64)")

        data_name = _xml_find(root, "Record3/DataLink/PointDataLink")
        if data_name is None or data_name not in names:
            candidates = [n for n in names if n.lower().endswith((".bin", "data.bin"))]
            if data_name is not None and data_name not in names and not candidates:
                raise ScanFormatError(
                    f"{origin}: PointDataLink {data_name!r} not present in container")
            if not candidates:
                raise ScanFormatError(f"{origin}: no binary data member found")
            data_name = candidates[0]
        payload = zf.read(data_name)

    itemsize = 4 if datatype == "F" else 8
    expected = size_x * size_y * itemsize
    if len(payload) != expected:
        raise ScanFormatError(
            f"{origin}: declared SizeX*SizeY = {size_x}*{size_y} needs {expected} "
            f"bytes of {data_name}, found {len(payload)}")
    dtype = np.dtype("<f4" if datatype == "F" else "<f8")
    raw = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    heights = raw.reshape(size_y, size_x) * 1e6  # meters -> µm
    mask = np.isfinite(heights)

    meta: dict = {}
    _flatten_xml(root, "", meta)
    fld = HeightField(heights=heights, mask=mask,
                      x_inc=inc_x_m * 1e6, y_inc=inc_y_m * 1e6)
    return fld, meta


def read_grid_csv(path_or_text, scan_cfg: ScanConfig | None = None) -> HeightField:
    """Plain-text grid: header `x_inc=<µm>,y_inc=<µm>`, then rows of numbers.

    Empty fields are missing cells. Rows must all have the same length.
    """
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        text = path_or_text
        origin = "<text>"
    else:
        text = Path(path_or_text).read_text("utf-8")
        origin = str(path_or_text)
    lines = text.splitlines()
    if not lines or not lines[0].replace(" ", "").startswith("x_inc="):
        raise ScanFormatError(f"{origin}: missing `x_inc=...,y_inc=...` header line")
    header: dict[str, float] = {}
    for part in lines[0].split(","):
        if "=" not in part:
            raise ScanFormatError(f"{origin}: malformed header field {part!r}")
        key, val = part.split("=", 1)
        try:
            header[key.strip()] = float(val)
        except ValueError as exc:
            raise ScanFormatError(f"{origin}: non-numeric header value {part!r}") from exc
    if "x_inc" not in header or "y_inc" not in header:
        raise ScanFormatError(f"{origin}: header must declare x_inc and y_inc")

    body = lines[1:]
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(body, start=2):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ScanFormatError(
                f"{origin}: ragged row at line {lineno} "
                f"({len(cells)} cells, expected {width})")
        row = []
        for col, cell in enumerate(cells):
            cell = cell.strip()
            if cell == "":
                row.append(np.nan)
                continue
            try:
                row.append(float(cell))
            except ValueError as exc:
                raise ScanFormatError(
                    f"{origin}: non-numeric cell {cell!r} at line {lineno}, "
                    f"column {col + 1}") from exc
        rows.append(row)
    if not rows:
        raise ScanFormatError(f"{origin}: no data rows")
    heights = np.array(rows, dtype=np.float64)
    return HeightField(heights=heights, mask=np.isfinite(heights),
                       x_inc=header["x_inc"], y_inc=header["y_inc"])


def write_grid_csv(fld: HeightField, path) -> None:
    """Inverse of read_grid_csv; values printed with shortest round-trip repr."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"x_inc={fld.x_inc!r},y_inc={fld.y_inc!r}\n")
        for r in range(fld.n_rows):
            cells = [
                repr(float(fld.heights[r, c])) if fld.mask[r, c] else ""
                for c in range(fld.n_cols)
            ]
            fh.write(",".join(cells) + "\n")


def downsample(fld: HeightField, factor: int) -> HeightField:
    """Block-mean over measured cells; empty blocks stay masked."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    if factor == 1:
        return HeightField(heights=fld.heights.copy(), mask=fld.mask.copy(),
                           x_inc=fld.x_inc, y_inc=fld.y_inc)
    out_rows = -(-fld.n_rows // factor)
    out_cols = -(-fld.n_cols // factor)
    padded = np.full((out_rows * factor, out_cols * factor), np.nan)
    padded[:fld.n_rows, :fld.n_cols] = fld.heights
    blocks = padded.reshape(out_rows, factor, out_cols, factor)
    counts = np.isfinite(blocks).sum(axis=(1, 3))
    with np.errstate(invalid="ignore"):
        sums = np.nansum(blocks, axis=(1, 3))
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return HeightField(heights=means, mask=counts > 0,
                       x_inc=fld.x_inc * factor, y_inc=fld.y_inc * factor)


def validate(record: ScanRecord, cfg: ScanConfig) -> ScanRecord:
    """Mechanical suitability check; returns the record with exclusion set.

    Never fails: an unsuitable scan comes back excluded with a reason.
    A record already excluded (e.g. by the manifest) is passed through.
    """
    if record.excluded:
        return record
    fld = record.field
    if fld is None:
        return ScanRecord(record.meta, None, True, "scan could not be read")
    reasons = []
    if fld.n_rows < cfg.min_rows:
        reasons.append(f"n_rows {fld.n_rows} below minimum {cfg.min_rows}")
    if fld.n_cols < cfg.min_cols:
        reasons.append(f"n_cols {fld.n_cols} below minimum {cfg.min_cols}")
    fraction = fld.measured_fraction
    if fraction < cfg.min_measured_fraction:
        reasons.append(
            f"measured fraction {fraction:.3f} below {cfg.min_measured_fraction}")
    if reasons:
        return ScanRecord(record.meta, fld, True, "; ".join(reasons))
    return record


MANIFEST_COLUMNS = ["path", "barrel_id", "shot_number", "land_index",
                    "excluded", "reason"]


@dataclass
class ManifestRow:
    path: str
    barrel_id: str
    shot_number: int
    land_index: int
    excluded: bool = False
    reason: str = ""
    crosscut_y: float | None = None  # optional manual override, µm

    def __post_init__(self):
        if not 1 <= self.land_index <= 6:
            raise ValueError(f"land_index must be 1..6, got {self.land_index}")

    @property
    def bullet_id(self) -> str:
        return f"{self.barrel_id}{self.shot_number}"


def _parse_bool(raw: str) -> bool:
    return raw.strip().lower() in ("1", "true", "yes")


def read_manifest(path) -> list[ManifestRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in MANIFEST_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ScanFormatError(f"{path}: manifest missing columns {missing}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                crosscut = rec.get("crosscut_y", "") or ""
                rows.append(ManifestRow(
                    path=rec["path"].strip(),
                    barrel_id=rec["barrel_id"].strip(),
                    shot_number=int(rec["shot_number"]),
                    land_index=int(rec["land_index"]),
                    excluded=_parse_bool(rec.get("excluded", "") or ""),
                    reason=(rec.get("reason", "") or "").strip(),
                    crosscut_y=float(crosscut) if crosscut.strip() else None,
                ))
            except ValueError as exc:
                raise ScanFormatError(f"{path}: bad manifest row {lineno}: {exc}") from exc
    return rows


def write_manifest(rows: list[ManifestRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS + ["crosscut_y"])
        for row in rows:
            writer.writerow([
                row.path, row.barrel_id, row.shot_number, row.land_index,
                "true" if row.excluded else "false", row.reason,
                "" if row.crosscut_y is None else repr(row.crosscut_y),
            ])


def read_scan(path, scan_cfg: ScanConfig | None = None) -> tuple[HeightField, dict]:
    """Dispatch on extension: .x3p containers or .csv grids."""
    p = Path(path)
    if p.suffix.lower() == ".x3p":
        return read_x3p(p)
    if p.suffix.lower() == ".csv":
        return read_grid_csv(p, scan_cfg), {}
    raise ScanFormatError(f"{path}: unrecognized scan extension {p.suffix!r}")


def ingest(scan_dir, manifest_rows: list[ManifestRow],
           cfg: ScanConfig) -> list[ScanRecord]:
    """Read and validate every manifest scan, merging manifest exclusions."""
    records = []
    for row in manifest_rows:
        meta = ScanMeta(barrel_id=row.barrel_id, shot_number=row.shot_number,
                        land_index=row.land_index,
                        source_path=str(Path(scan_dir) / row.path))
        if row.excluded:
            records.append(ScanRecord(meta, None, True,
                                      row.reason or "excluded by manifest"))
            continue
        try:
            fld, extra = read_scan(Path(scan_dir) / row.path, cfg)
        except (ScanFormatError, OSError) as exc:
            records.append(ScanRecord(meta, None, True, f"unreadable scan: {exc}"))
            continue
        meta.extra = extra
        records.append(validate(ScanRecord(meta, fld), cfg))
    return records
