"""Timing analyses: relative phase, circular modes, mora regression, tempo judgements."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .beats import BeatList
from .oscillator import AdaptiveOscillator, PulseTrain, entrain

WITH_STIMULUS = "with-stimulus"
POST_STIMULUS = "post-stimulus"
POST_PAUSE = "post-pause"
GROUPS = (WITH_STIMULUS, POST_STIMULUS, POST_PAUSE)

FASTER = "faster"
SLOWER = "slower"
EQUAL = "equal"


@dataclass(frozen=True)
class PhaseSample:
    phi: float
    trial_id: str = "0"
    group_tag: str = WITH_STIMULUS

    def __post_init__(self):
        if not 0.0 <= self.phi < 1.0:
            raise ValueError(f"phase must be in [0, 1), got {self.phi}")


def measure_phase(
    target_times: Sequence[float] | BeatList,
    anchor_times: Sequence[float],
    trial_id: str = "0",
    group_tag: str = WITH_STIMULUS,
) -> tuple[list[PhaseSample], int]:
    """Phase of each target within the anchor interval that contains it.

    A target at ``t`` in ``[a_i, a_{i+1})`` gets ``(t - a_i) / (a_{i+1} - a_i)``.
    Targets outside every interval are dropped; their count is returned
    alongside the samples.
    """
    if isinstance(target_times, BeatList):
        target_times = target_times.times
    anchors = np.asarray(anchor_times, dtype=float)
    if anchors.size < 2:
        raise ValueError("need at least 2 anchors")
    if np.any(np.diff(anchors) <= 0):
        raise ValueError("anchor times must be strictly increasing")
    samples = []
    dropped = 0
    for t in np.asarray(target_times, dtype=float):
        i = int(np.searchsorted(anchors, t, side="right")) - 1
        if i < 0 or i >= anchors.size - 1:
            dropped += 1
            continue
        phi = (t - anchors[i]) / (anchors[i + 1] - anchors[i])
        samples.append(PhaseSample(min(phi, math.nextafter(1.0, 0.0)), trial_id, group_tag))
    return samples, dropped


@dataclass(frozen=True)
class ModeReport:
    modes: tuple[tuple[float, float], ...]
    bandwidth: float
    diffuse: bool = False
    peak_to_floor: float = math.inf

    @property
    def locations(self) -> np.ndarray:
        return np.array([m[0] for m in self.modes])

    @property
    def masses(self) -> np.ndarray:
        return np.array([m[1] for m in self.modes])

    def to_dict(self) -> dict:
        return {
            "modes": [{"location": loc, "mass": mass} for loc, mass in self.modes],
            "bandwidth": self.bandwidth,
            "diffuse": self.diffuse,
            "peak_to_floor": None if math.isinf(self.peak_to_floor) else self.peak_to_floor,
        }


def circular_kde(phases: Sequence[float], bandwidth: float, grid_size: int = 1000, n_wraps: int = 3):
    """Wrapped-Gaussian kernel density of phases on a regular grid over [0, 1)."""
    x = np.asarray(phases, dtype=float)
    grid = np.arange(grid_size) / grid_size
    diff = grid[:, None] - x[None, :]
    diff -= np.round(diff)
    dens = np.zeros(grid_size)
    for k in range(-n_wraps, n_wraps + 1):
        dens += np.exp(-0.5 * ((diff + k) / bandwidth) ** 2).sum(axis=1)
    dens /= x.size * bandwidth * math.sqrt(2.0 * math.pi)
    return grid, dens


def _circ_dist(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    return np.minimum(d, 1.0 - d)


def mode_report(
    phases: Sequence[PhaseSample] | Sequence[float],
    bandwidth: float = 0.02,
    min_height: float = 0.1,
    diffuse_ratio: float = 2.0,
    grid_size: int = 1000,
) -> ModeReport:
    """Local maxima of the circular density above ``min_height`` of the global maximum.

    ``mass`` is the fraction of samples whose nearest mode (circularly) is
    that mode. The report is flagged ``diffuse`` when the density peak is
    below ``diffuse_ratio`` times its minimum.
    """
    values = [p.phi if isinstance(p, PhaseSample) else float(p) for p in phases]
    if not values:
        raise ValueError("mode_report needs at least one sample")
    if not 0.0 < bandwidth < 0.25:
        raise ValueError("bandwidth must be in (0, 0.25)")
    grid, dens = circular_kde(values, bandwidth, grid_size)
    top = dens.max()
    left = np.roll(dens, 1)
    right = np.roll(dens, -1)
    # plateau-safe: strictly above the left neighbour, at least the right one
    peaks = np.flatnonzero((dens > left) & (dens >= right) & (dens > min_height * top))
    locs = np.array(sorted(grid[peaks]))
    x = np.asarray(values)
    if locs.size:
        nearest = np.argmin(_circ_dist(x[:, None], locs[None, :]), axis=1)
        masses = np.bincount(nearest, minlength=locs.size) / x.size
    else:
        masses = np.zeros(0)
    floor = dens.min()
    ratio = math.inf if floor <= 0 else float(top / floor)
    return ModeReport(
        tuple((float(l), float(m)) for l, m in zip(locs, masses)),
        bandwidth,
        diffuse=ratio < diffuse_ratio,
        peak_to_floor=ratio,
    )


def nominal_phases(beats_per_measure: int, stress_position: int) -> float:
    """Nominal phase of the ``stress_position``-th beat (1-based) in a measure."""
    if beats_per_measure < 1:
        raise ValueError("beats_per_measure must be >= 1")
    if not 1 <= stress_position <= beats_per_measure:
        raise ValueError("stress_position must be in [1, beats_per_measure]")
    return (stress_position - 1) / beats_per_measure


@dataclass(frozen=True)
class MoraRegression:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
        }


def mora_regression(points: Sequence[tuple[int, float]]) -> MoraRegression:
    """Ordinary least squares of word duration on mora count."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 2:
        raise ValueError("need at least two (mora_count, duration) points")
    n, d = arr[:, 0], arr[:, 1]
    nc = n - n.mean()
    sxx = float(nc @ nc)
    if sxx == 0.0:
        raise ValueError("mora counts are all identical")
    slope = float(nc @ (d - d.mean())) / sxx
    intercept = float(d.mean() - slope * n.mean())
    resid = d - (intercept + slope * n)
    ss_res = float(resid @ resid)
    ss_tot = float((d - d.mean()) @ (d - d.mean()))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return MoraRegression(slope, intercept, r2, int(arr.shape[0]))


def interval_stats(beats: BeatList | Sequence[float]) -> tuple[float, float, int]:
    """Mean, population sd and count of consecutive inter-beat intervals."""
    times = beats.times if isinstance(beats, BeatList) else np.asarray(beats, dtype=float)
    if times.size < 2:
        raise ValueError("need at least 2 beats")
    iv = np.diff(times)
    return float(iv.mean()), float(iv.std()), int(iv.size)


@dataclass(frozen=True)
class Discrimination:
    answer: str
    period_a: float
    period_b: float


def _relative(train: PulseTrain) -> PulseTrain:
    t0 = train[0].time
    return PulseTrain.from_arrays(train.times - t0, train.amplitudes)


def simulate_tempo_discrimination(
    series_a: PulseTrain,
    series_b: PulseTrain,
    osc: Optional[AdaptiveOscillator] = None,
    jnd: float = 0.02,
    pause: float = 1.5,
    dt: float = 0.001,
    reset_per_series: bool = False,
) -> Discrimination:
    """Judge whether ``series_b`` is faster, slower or equal in tempo to ``series_a``.

    A fresh oscillator entrains to ``series_a``; its final period is ``p_a``.
    The same oscillator then free-runs through ``pause`` seconds (decay
    active) and entrains to ``series_b``, ending with ``p_b``. The
    inter-series gap is not treated as an observed interval. With
    ``reset_per_series`` each series gets a fresh oscillator instead.

    ``faster`` when ``p_b < p_a (1 - jnd)``, ``slower`` when
    ``p_a < p_b (1 - jnd)``, otherwise ``equal``; the rule is symmetric
    under swapping the series.
    """
    for name, s in (("series_a", series_a), ("series_b", series_b)):
        if len(s) < 2:
            raise ValueError(f"{name} needs at least 2 pulses")
    if not 0.0 <= jnd < 1.0:
        raise ValueError("jnd must be in [0, 1)")
    fresh = osc if osc is not None else AdaptiveOscillator.at_rest(0.5)
    a = _relative(series_a)
    b = _relative(series_b)

    trace_a = entrain(fresh, a, dt, a[-1].time)
    p_a = trace_a.final.period
    if reset_per_series:
        start_b = fresh
    else:
        carried = replace(trace_a.final, last_reset_time=None, last_interval=None)
        gap = entrain(carried, PulseTrain(), dt, pause)
        start_b = gap.final
    trace_b = entrain(start_b, b, dt, b[-1].time)
    p_b = trace_b.final.period
    if p_b < p_a * (1.0 - jnd):
        answer = FASTER
    elif p_a < p_b * (1.0 - jnd):
        answer = SLOWER
    else:
        answer = EQUAL
    return Discrimination(answer, p_a, p_b)
