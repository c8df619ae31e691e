"""Synthetic barrel/bullet generator with known ground truth.

Each barrel owns six independent striation patterns (band-limited random
sinusoid mixtures). A bullet fired from that barrel carries the patterns
cyclically rotated by a per-bullet phase, each land windowed at a small
random jitter and overlaid with measurement noise. The generator reports
the planted phase and jitters, so recovered lags/phases can be checked
against ground truth. Patterns can also be wrapped in bullet curvature and
groove shoulders to exercise the full scan pipeline.

Profiles destined for groove detection taper their striations toward the
ends: the shoulder threshold is a quantile of mid-profile residual
magnitudes, so a fixture whose outer quarters carry full-strength texture
would trip it on ordinary texture extremes rather than on shoulders, and
the planted inner edges would stop being the unique answer.
"""

import math
from dataclasses import dataclass

import numpy as np

from .compare import N_LANDS, Bullet
from .scan_io import HeightField
from .signal import Signal

DEFAULT_X_INC = 0.645      # µm between samples
DEFAULT_LENGTH = 2000      # samples per rendered land signal
DEFAULT_JITTER = 40        # max |window offset| in samples
N_HARMONICS = 80
MIN_PERIOD = 15.0          # samples
MAX_PERIOD = 150.0


def make_pattern(rng: np.random.Generator, length: int,
                 amplitude: float = 1.0) -> np.ndarray:
    """Random striation pattern: sinusoid mixture with RMS = amplitude."""
    xs = np.arange(length, dtype=np.float64)
    periods = rng.uniform(MIN_PERIOD, MAX_PERIOD, size=N_HARMONICS)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=N_HARMONICS)
    weights = rng.uniform(0.2, 1.0, size=N_HARMONICS)
    pattern = np.zeros(length)
    for period, phase, weight in zip(periods, phases, weights):
        pattern += weight * np.sin(2.0 * math.pi * xs / period + phase)
    rms = math.sqrt(float(pattern @ pattern) / length)
    return pattern * (amplitude / rms)


def striation_taper(n: int, ramp_start: float = 0.175,
                    ramp_end: float = 0.35) -> np.ndarray:
    """Cosine window: 0 at the ends, 1 on the middle, symmetric."""
    idx = np.arange(n, dtype=np.float64)
    a, b = ramp_start * n, ramp_end * n
    t_left = np.clip((idx - a) / (b - a), 0.0, 1.0)
    t_right = np.clip(((n - 1 - idx) - a) / (b - a), 0.0, 1.0)
    t = np.minimum(t_left, t_right)
    return 0.5 - 0.5 * np.cos(math.pi * t)


@dataclass
class Barrel:
    barrel_id: str
    patterns: list          # 6 arrays of length `length + 2*jitter`
    amplitude: float
    length: int
    jitter: int


@dataclass
class BulletTruth:
    bullet_id: str
    barrel_id: str
    shot_number: int
    phase: int              # cyclic pattern offset planted on this bullet
    jitters: list           # per-land window offset in samples


def make_barrel(rng: np.random.Generator, barrel_id: str,
                length: int = DEFAULT_LENGTH, jitter: int = DEFAULT_JITTER,
                amplitude: float = 1.0) -> Barrel:
    padded = length + 2 * jitter
    patterns = [make_pattern(rng, padded, amplitude) for _ in range(N_LANDS)]
    return Barrel(barrel_id=barrel_id, patterns=patterns,
                  amplitude=amplitude, length=length, jitter=jitter)


def _land_window(barrel: Barrel, pattern_index: int, offset: int) -> np.ndarray:
    start = barrel.jitter + offset
    return barrel.patterns[pattern_index][start:start + barrel.length]


def make_bullet(rng: np.random.Generator, barrel: Barrel, shot_number: int,
                noise_sigma: float = 0.05,
                x_inc: float = DEFAULT_X_INC) -> tuple[Bullet, BulletTruth]:
    """Render one bullet as six Signal objects plus its ground truth.

    Land ell (0-based) carries barrel pattern (ell + phase) mod 6, windowed
    at a per-land jitter, plus white noise of noise_sigma × amplitude.
    """
    phase = int(rng.integers(0, N_LANDS))
    jitters = [int(rng.integers(-barrel.jitter, barrel.jitter + 1))
               for _ in range(N_LANDS)]
    bullet_id = f"{barrel.barrel_id}{shot_number}"
    lands = []
    for ell in range(N_LANDS):
        values = _land_window(barrel, (ell + phase) % N_LANDS, jitters[ell]).copy()
        if noise_sigma > 0:
            values += rng.normal(0.0, noise_sigma * barrel.amplitude,
                                 size=len(values))
        lands.append(Signal(values=values, mask=np.ones(len(values), dtype=bool),
                            x_inc=x_inc))
    bullet = Bullet(bullet_id=bullet_id, lands=lands,
                    barrel_id=barrel.barrel_id, shot_number=shot_number)
    truth = BulletTruth(bullet_id=bullet_id, barrel_id=barrel.barrel_id,
                        shot_number=shot_number, phase=phase, jitters=jitters)
    return bullet, truth


def planted_phase(truth1: BulletTruth, truth2: BulletTruth) -> int:
    """Expected best_phase for land_matrix(bullet1, bullet2)."""
    return (truth1.phase - truth2.phase) % N_LANDS


def make_bullet_set(seed: int, barrel_ids: list, shots_per_barrel: int,
                    noise_sigma: float = 0.05, length: int = DEFAULT_LENGTH,
                    jitter: int = DEFAULT_JITTER,
                    first_shot: int = 11) -> tuple[list, dict]:
    """Fixed-seed multi-barrel set: (bullets, truth-by-bullet-id)."""
    rng = np.random.default_rng(seed)
    bullets, truths = [], {}
    for barrel_id in barrel_ids:
        barrel = make_barrel(rng, barrel_id, length=length, jitter=jitter)
        for i in range(shots_per_barrel):
            bullet, truth = make_bullet(rng, barrel, first_shot + i,
                                        noise_sigma=noise_sigma)
            bullets.append(bullet)
            truths[bullet.bullet_id] = truth
    return bullets, truths


@dataclass
class ShoulderTruth:
    left_width: int         # shoulder occupies [0, left_width), 0 = none
    right_width: int        # and [n - right_width, n), 0 = none

    def left_inner_edge(self) -> int:
        return self.left_width

    def right_inner_edge(self, n: int) -> int:
        return n - self.right_width - 1


def make_profile_heights(rng: np.random.Generator, length: int = DEFAULT_LENGTH,
                         amplitude: float = 1.0, curvature: float = 30.0,
                         shoulder_height: float = 30.0,
                         left_shoulder: bool = True,
                         right_shoulder: bool = True,
                         noise_sigma: float = 0.05
                         ) -> tuple[np.ndarray, ShoulderTruth]:
    """A raw profile: tapered striations + parabolic curvature + shoulders.

    The parabola peaks mid-profile at `curvature` µm; shoulders are
    rectangular steps of `shoulder_height` µm overlaid on the profile ends,
    each strictly inside its outer quarter.
    """
    heights = make_pattern(rng, length, amplitude) * striation_taper(length)
    xs = np.arange(length, dtype=np.float64)
    mid = (length - 1) / 2.0
    heights += curvature * (1.0 - ((xs - mid) / mid) ** 2)
    if noise_sigma > 0:
        heights += rng.normal(0.0, noise_sigma * amplitude, size=length)
    max_width = max(3, int(length * 0.25) - 10)
    left_width = right_width = 0
    if left_shoulder:
        left_width = int(rng.integers(60, min(140, max_width) + 1))
        heights[:left_width] += shoulder_height
    if right_shoulder:
        right_width = int(rng.integers(60, min(140, max_width) + 1))
        heights[length - right_width:] += shoulder_height
    return heights, ShoulderTruth(left_width=left_width,
                                  right_width=right_width)


def render_field(rng: np.random.Generator, profile_heights: np.ndarray,
                 n_rows: int = 48, x_inc: float = DEFAULT_X_INC,
                 y_inc: float = 12.5, cell_noise: float = 0.01
                 ) -> HeightField:
    """Stack a profile into a 2D scan: constant down columns + cell noise."""
    heights = np.tile(profile_heights, (n_rows, 1))
    if cell_noise > 0:
        heights = heights + rng.normal(0.0, cell_noise, size=heights.shape)
    return HeightField(heights=heights, mask=np.isfinite(heights),
                       x_inc=x_inc, y_inc=y_inc)


def make_scan_set(seed: int, barrel_ids: list, shots_per_barrel: int,
                  noise_sigma: float = 0.05, length: int = DEFAULT_LENGTH,
                  jitter: int = DEFAULT_JITTER, amplitude: float = 1.0,
                  curvature: float = 30.0, shoulder_height: float = 30.0,
                  n_rows: int = 48, first_shot: int = 11):
    """Full-pipeline fixture: yields (meta dict, HeightField) lazily.

    One scan is materialized at a time, so a 40-bullet set never holds more
    than a single field in memory. Each profile is the tapered striation
    window plus curvature, padded with flat shoulder shelves on both ends.
    """
    rng = np.random.default_rng(seed)
    taper = striation_taper(length)

    def generate():
        for barrel_id in barrel_ids:
            barrel = make_barrel(rng, barrel_id, length=length, jitter=jitter,
                                 amplitude=amplitude)
            for i in range(shots_per_barrel):
                shot = first_shot + i
                phase = int(rng.integers(0, N_LANDS))
                for ell in range(N_LANDS):
                    offset = int(rng.integers(-jitter, jitter + 1))
                    pattern = _land_window(barrel, (ell + phase) % N_LANDS,
                                           offset) * taper
                    if noise_sigma > 0:
                        pattern = pattern + rng.normal(
                            0.0, noise_sigma * amplitude, size=len(pattern))
                    xs = np.arange(length, dtype=np.float64)
                    mid = (length - 1) / 2.0
                    profile = pattern + curvature * (1.0 - ((xs - mid) / mid) ** 2)
                    left_w = int(rng.integers(80, 141))
                    right_w = int(rng.integers(80, 141))
                    profile = np.concatenate([
                        np.full(left_w, shoulder_height),
                        profile,
                        np.full(right_w, shoulder_height),
                    ])
                    fld = render_field(rng, profile, n_rows=n_rows)
                    yield ({"barrel_id": barrel_id, "shot_number": shot,
                            "land_index": ell + 1, "phase": phase,
                            "jitter": offset,
                            "left_width": left_w, "right_width": right_w},
                           fld)

    return generate()
