"""Pipeline configuration.

Defaults live in defaults.ini next to this module; load_config() reads them
and optionally overlays a user-supplied INI file with the same sections.
The parsed object is a plain nested dataclass so every threshold has one
typed home, and snapshot() returns the full parameter set for bundles.
"""

import configparser
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path


@dataclass
class ScanConfig:
    default_x_inc: float = 0.645
    default_y_inc: float = 0.645
    min_measured_fraction: float = 0.6
    min_rows: int = 5
    min_cols: int = 50


@dataclass
class CrosscutConfig:
    step: float = 25.0
    stability_threshold: float = 0.95
    window: int = 3
    min_row_fraction: float = 0.8


@dataclass
class ProfileConfig:
    band_halfwidth: int = 2


@dataclass
class GrooveConfig:
    span: float = 1.0
    degree: int = 2
    robust_iterations: int = 2
    edge_fraction: float = 0.25
    shoulder_quantile: float = 0.99
    min_unmasked: int = 50


@dataclass
class DetrendConfig:
    span: float = 0.75
    degree: int = 2
    robust_iterations: int = 2


@dataclass
class CompareConfig:
    max_lag: int = 500
    min_overlap: int | None = None
    min_in_phase_valid: int = 3
    workers: int = 1


@dataclass
class AnalyzeConfig:
    outlier_quantile: float = 0.05
    trend_span: float = 0.75
    trend_degree: int = 2
    trend_robust_iterations: int = 2


@dataclass
class BundleConfig:
    thumbnail_factor: int = 8


@dataclass
class PipelineConfig:
    scan: ScanConfig = field(default_factory=ScanConfig)
    crosscut: CrosscutConfig = field(default_factory=CrosscutConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    grooves: GrooveConfig = field(default_factory=GrooveConfig)
    detrend: DetrendConfig = field(default_factory=DetrendConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    analyze: AnalyzeConfig = field(default_factory=AnalyzeConfig)
    bundle: BundleConfig = field(default_factory=BundleConfig)

    def validate(self) -> None:
        if not 0 < self.detrend.span <= 1 or not 0 < self.grooves.span <= 1:
            raise ValueError("loess span must be in (0, 1]")
        if self.detrend.degree not in (1, 2) or self.grooves.degree not in (1, 2):
            raise ValueError("loess degree must be 1 or 2")
        if self.grooves.edge_fraction >= 0.5 or self.grooves.edge_fraction <= 0:
            raise ValueError("grooves.edge_fraction must be in (0, 0.5)")
        if self.compare.max_lag < 0:
            raise ValueError("compare.max_lag must be >= 0")
        if not 0 < self.analyze.outlier_quantile < 1:
            raise ValueError("analyze.outlier_quantile must be in (0, 1)")

    def snapshot(self) -> dict:
        """Full parameter set, JSON-ready, for bundle provenance."""
        return asdict(self)


_SECTIONS = {
    "scan": ScanConfig,
    "crosscut": CrosscutConfig,
    "profile": ProfileConfig,
    "grooves": GrooveConfig,
    "detrend": DetrendConfig,
    "compare": CompareConfig,
    "analyze": AnalyzeConfig,
    "bundle": BundleConfig,
}


def _coerce(current, raw: str):
    raw = raw.strip()
    if raw == "":
        return None
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if current is None:
        # Only compare.min_overlap today: blank = auto, otherwise integer.
        return int(raw)
    return raw


def _apply_ini(cfg: PipelineConfig, text: str, origin: str) -> None:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text, source=origin)
    for section_name, section in parser.items():
        if section_name == "DEFAULT":
            continue
        if section_name not in _SECTIONS:
            raise ValueError(f"{origin}: unknown config section [{section_name}]")
        target = getattr(cfg, section_name)
        for key, raw in section.items():
            if not hasattr(target, key):
                raise ValueError(f"{origin}: unknown key {key!r} in [{section_name}]")
            setattr(target, key, _coerce(getattr(target, key), raw))


def default_config_text() -> str:
    return resources.files("striae").joinpath("defaults.ini").read_text("utf-8")


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Defaults from defaults.ini, overlaid with `path` when given."""
    cfg = PipelineConfig()
    _apply_ini(cfg, default_config_text(), "defaults.ini")
    if path is not None:
        text = Path(path).read_text("utf-8")
        _apply_ini(cfg, text, str(path))
    cfg.validate()
    return cfg
