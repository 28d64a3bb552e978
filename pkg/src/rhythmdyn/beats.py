"""Acoustic beat extraction from speech audio.

Pipeline: gammatone filterbank -> half-wave rectification -> channel sum ->
zero-phase smoothing -> rectification -> second smoothing. Every rise of the
resulting sonority envelope yields one beat whose magnitude is the rise
height relative to the largest rise in the file.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.signal import gammatone, lfilter

from .audio import AudioBuffer

HALF_RISE = "amplitude"
MIDPOINT = "time"


@dataclass(frozen=True)
class BeatConfig:
    bands: int = 6
    lo_hz: float = 300.0
    hi_hz: float = 2000.0
    smooth1_ms: float = 20.0
    smooth2_ms: float = 40.0
    min_rise_fraction: float = 0.1
    halfway: str = HALF_RISE

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, values: dict) -> "BeatConfig":
        known = {k: values[k] for k in cls.__dataclass_fields__ if k in values}
        unknown = set(values) - set(known)
        if unknown:
            raise ValueError(f"unknown beat config keys: {sorted(unknown)}")
        cfg = cls(**known)
        return cls(
            bands=int(cfg.bands),
            lo_hz=float(cfg.lo_hz),
            hi_hz=float(cfg.hi_hz),
            smooth1_ms=float(cfg.smooth1_ms),
            smooth2_ms=float(cfg.smooth2_ms),
            min_rise_fraction=float(cfg.min_rise_fraction),
            halfway=str(cfg.halfway),
        )


@dataclass(frozen=True)
class Envelope:
    values: np.ndarray
    sample_rate: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("envelope must be one-dimensional")
        if np.any(values < 0):
            raise ValueError("envelope values must be non-negative")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Beat:
    time: float
    magnitude: float

    def __post_init__(self):
        if not 0.0 < self.magnitude <= 1.0:
            raise ValueError(f"beat magnitude must be in (0, 1], got {self.magnitude}")


@dataclass(frozen=True)
class BeatList:
    beats: tuple[Beat, ...]
    source_duration: float

    def __post_init__(self):
        beats = tuple(self.beats)
        object.__setattr__(self, "beats", beats)
        for a, b in zip(beats, beats[1:]):
            if not b.time > a.time:
                raise ValueError("beat times must be strictly increasing")
        for b in beats:
            if not 0.0 <= b.time <= self.source_duration:
                raise ValueError(f"beat at {b.time} s lies outside [0, {self.source_duration}]")

    def __len__(self) -> int:
        return len(self.beats)

    def __iter__(self):
        return iter(self.beats)

    def __getitem__(self, i):
        return self.beats[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([b.time for b in self.beats], dtype=float)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.array([b.magnitude for b in self.beats], dtype=float)


def hz_to_erb_rate(f):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=float))


def erb_rate_to_hz(e):
    return (10.0 ** (np.asarray(e, dtype=float) / 21.4) - 1.0) / 0.00437


def erb_centers(lo: float, hi: float, bands: int) -> np.ndarray:
    """``bands`` centre frequencies equally spaced on the ERB-rate scale, ends included."""
    if bands == 1:
        return erb_rate_to_hz([(hz_to_erb_rate(lo) + hz_to_erb_rate(hi)) / 2.0])
    return erb_rate_to_hz(np.linspace(hz_to_erb_rate(lo), hz_to_erb_rate(hi), bands))


def smooth_zero_phase(x: np.ndarray, time_constant_ms: float, sample_rate: int) -> np.ndarray:
    """First-order low-pass run forward then backward."""
    if time_constant_ms <= 0:
        return np.asarray(x, dtype=float).copy()
    a = np.exp(-1000.0 / (time_constant_ms * sample_rate))
    b, den = [1.0 - a], [1.0, -a]
    y = lfilter(b, den, x)
    return lfilter(b, den, y[::-1])[::-1]


def sonority_envelope(
    audio: AudioBuffer,
    bands: int = 6,
    lo: float = 300.0,
    hi: float = 2000.0,
    smooth1_ms: float = 20.0,
    smooth2_ms: float = 40.0,
) -> Envelope:
    fs = audio.sample_rate
    if bands < 1:
        raise ValueError("bands must be >= 1")
    if not 0.0 < lo < hi < fs / 2.0:
        raise ValueError(f"need 0 < lo < hi < fs/2, got lo={lo}, hi={hi}, fs={fs}")
    x = audio.samples
    total = np.zeros_like(x)
    for fc in erb_centers(lo, hi, bands):
        b, a = gammatone(float(fc), "iir", fs=fs)
        total += np.maximum(lfilter(b, a, x), 0.0)
    env = smooth_zero_phase(total, smooth1_ms, fs)
    env = smooth_zero_phase(np.maximum(env, 0.0), smooth2_ms, fs)
    return Envelope(np.maximum(env, 0.0), fs)


def _turning_points(values: np.ndarray) -> list[tuple[int, int]]:
    """(min index, max index) for every rise, plateaus collapsed.

    A flat valley contributes its last sample, a flat peak its first, so a
    ramp between two plateaus spans exactly the ramp.
    """
    n = values.size
    if n < 2:
        return []
    change = np.flatnonzero(np.diff(values) != 0.0)
    if change.size == 0:
        return []
    # run starts/ends over the de-duplicated sequence
    starts = np.concatenate([[0], change + 1])
    ends = np.concatenate([change, [n - 1]])
    levels = values[starts]
    m = levels.size
    pairs = []
    current_min: Optional[int] = None
    for r in range(m):
        left_higher = r == 0 or levels[r - 1] > levels[r]
        right_higher = r == m - 1 or levels[r + 1] > levels[r]
        left_lower = r > 0 and levels[r - 1] < levels[r]
        right_lower = r == m - 1 or levels[r + 1] < levels[r]
        if left_higher and right_higher and r < m - 1:
            current_min = int(ends[r])
        elif left_lower and right_lower and current_min is not None:
            pairs.append((current_min, int(starts[r])))
            current_min = None
    return pairs


def _half_rise_index(values: np.ndarray, i_min: int, i_max: int) -> float:
    """Fractional index where the rise last crosses its halfway level before the peak."""
    level = 0.5 * (values[i_min] + values[i_max])
    seg = values[i_min : i_max + 1]
    below = np.flatnonzero(seg < level)
    j = int(below[-1])
    lo_v, hi_v = seg[j], seg[j + 1]
    frac = (level - lo_v) / (hi_v - lo_v)
    return i_min + j + float(frac)


def detect_beats(env: Envelope, min_rise_fraction: float = 0.1, halfway: str = HALF_RISE) -> BeatList:
    """Beats at the rises of ``env``.

    ``halfway="amplitude"`` places each beat where the envelope crosses the
    level halfway between the local minimum and the following maximum;
    ``halfway="time"`` uses the midpoint of their sample indices.
    """
    if not 0.0 < min_rise_fraction < 1.0:
        raise ValueError("min_rise_fraction must be in (0, 1)")
    if halfway not in (HALF_RISE, MIDPOINT):
        raise ValueError(f"halfway must be {HALF_RISE!r} or {MIDPOINT!r}")
    v = env.values
    fs = env.sample_rate
    duration = v.size / fs
    pairs = _turning_points(v)
    rises = [v[j] - v[i] for i, j in pairs]
    if not rises:
        return BeatList((), duration)
    largest = max(rises)
    beats = []
    for (i, j), rise in zip(pairs, rises):
        if rise < min_rise_fraction * largest:
            continue
        idx = _half_rise_index(v, i, j) if halfway == HALF_RISE else 0.5 * (i + j)
        beats.append(Beat(float(idx / fs), float(min(1.0, rise / largest))))
    return BeatList(tuple(beats), duration)


def extract_beats(audio: AudioBuffer, config: Optional[BeatConfig] = None) -> BeatList:
    cfg = config or BeatConfig()
    env = sonority_envelope(audio, cfg.bands, cfg.lo_hz, cfg.hi_hz, cfg.smooth1_ms, cfg.smooth2_ms)
    return detect_beats(env, cfg.min_rise_fraction, cfg.halfway)
