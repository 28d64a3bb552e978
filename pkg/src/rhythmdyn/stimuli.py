"""Seedable generators for pulse trains, trial schedules, mora data and test audio."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .audio import AudioBuffer
from .oscillator import Pulse, PulseTrain


def gen_periodic(period: float, count: int, amplitude: float = 1.0, start_time: float = 0.0) -> PulseTrain:
    if not period > 0:
        raise ValueError("period must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    return PulseTrain(tuple(Pulse(start_time + i * period, amplitude) for i in range(count)))


def gen_jittered(
    period: float,
    count: int,
    amplitude: float = 1.0,
    jitter_sd: float = 0.0,
    seed: int = 0,
    start_time: Optional[float] = None,
) -> PulseTrain:
    """Periodic train with independent Gaussian offsets on every pulse time.

    ``start_time`` defaults to ``period`` so that offsets never push the first
    pulse below zero.
    """
    if jitter_sd < 0:
        raise ValueError("jitter_sd must be >= 0")
    if not jitter_sd < period / 3.0:
        raise ValueError("jitter_sd must be below period/3")
    if count < 1:
        raise ValueError("count must be >= 1")
    start = period if start_time is None else start_time
    nominal = start + period * np.arange(count)
    rng = np.random.default_rng(seed)
    times = nominal + rng.normal(0.0, jitter_sd, count) if jitter_sd > 0 else nominal
    times = np.sort(np.maximum(times, 0.0))
    return PulseTrain.from_arrays(times, [amplitude] * count)


def drop_pulses(train: PulseTrain, indices: Sequence[int]) -> PulseTrain:
    n = len(train)
    for i in indices:
        if not 0 <= i < n:
            raise ValueError(f"pulse index {i} out of range for {n} pulses")
    skip = set(indices)
    return PulseTrain(tuple(p for i, p in enumerate(train) if i not in skip))


def gen_hierarchical(
    beat_period: float,
    beats_per_measure: int,
    strong_amp: float = 1.0,
    weak_amp: float = 0.5,
    n_measures: int = 8,
    downbeat_offset: int = 0,
    start_time: float = 0.0,
) -> PulseTrain:
    """Pulses every ``beat_period``; every ``beats_per_measure``-th one is strong.

    ``downbeat_offset`` rotates which serial position carries the first
    strong pulse (0 means the very first pulse).
    """
    if not (0 < weak_amp < strong_amp <= 1.0):
        raise ValueError("need 0 < weak_amp < strong_amp <= 1")
    if beats_per_measure < 1:
        raise ValueError("beats_per_measure must be >= 1")
    if not 0 <= downbeat_offset < beats_per_measure:
        raise ValueError("downbeat_offset must be in [0, beats_per_measure)")
    n = beats_per_measure * n_measures
    return PulseTrain(
        tuple(
            Pulse(
                start_time + i * beat_period,
                strong_amp if (i - downbeat_offset) % beats_per_measure == 0 else weak_amp,
            )
            for i in range(n)
        )
    )


def gen_random(duration: float, rate: float, seed: int, amplitude_range=(0.2, 1.0), min_gap: float = 0.05) -> PulseTrain:
    """Poisson-like pulse times with uniform random amplitudes.

    Pulses closer than ``min_gap`` to their predecessor are discarded.
    """
    rng = np.random.default_rng(seed)
    n = rng.poisson(rate * duration)
    times = np.sort(rng.uniform(0.0, duration, n))
    amps = rng.uniform(amplitude_range[0], amplitude_range[1], n)
    keep_t, keep_a = [], []
    for t, a in zip(times, amps):
        if not keep_t or t - keep_t[-1] >= min_gap:
            keep_t.append(float(t))
            keep_a.append(float(a))
    return PulseTrain.from_arrays(keep_t, keep_a)


@dataclass(frozen=True)
class TrialSchedule:
    anchor_times: tuple[float, ...]
    target_times: tuple[float, ...]
    phi_target: float
    cycle: float

    def to_dict(self) -> dict:
        return {
            "anchor_times": list(self.anchor_times),
            "target_times": list(self.target_times),
            "phi_target": self.phi_target,
            "cycle": self.cycle,
        }


def gen_take_cards(phi_target: float, cycle: float = 1.5, n_reps: int = 8) -> TrialSchedule:
    """Anchor ("take") beats every ``cycle`` s with a target ("cards") beat at ``phi_target``."""
    if not 0.0 < phi_target < 1.0:
        raise ValueError("phi_target must be in (0, 1)")
    if not cycle > 0:
        raise ValueError("cycle must be positive")
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    anchors = tuple(i * cycle for i in range(n_reps))
    targets = tuple((i + phi_target) * cycle for i in range(n_reps))
    return TrialSchedule(anchors, targets, phi_target, cycle)


def compensated_moras(deviations: np.ndarray, mean_mora: float, compensation_strength: float) -> np.ndarray:
    """Mora durations after neighbour compensation.

    A fraction ``c`` of each mora's deviation is taken back by the following
    mora; the word-final mora's deviation is absorbed by the one before it.
    A single-mora word compensates internally. Word totals therefore carry
    only ``(1 - c)`` of the summed intrinsic deviation.
    """
    c = compensation_strength
    eps = np.asarray(deviations, dtype=float)
    n = eps.size
    out = mean_mora + eps.copy()
    if n == 1:
        out[0] -= c * eps[0]
        return out
    out[1:] -= c * eps[:-1]
    out[-2] -= c * eps[-1]
    return out


def gen_mora_dataset(
    mean_mora: float = 0.15,
    max_moras: int = 7,
    reps: int = 20,
    compensation_strength: float = 1.0,
    noise_sd: float = 0.0,
    seed: int = 0,
    mora_sd: Optional[float] = None,
) -> list[tuple[int, float]]:
    """Word durations for words of 1..``max_moras`` moras, ``reps`` tokens each.

    ``mora_sd`` is the intrinsic per-mora spread (default ``0.3 * mean_mora``);
    ``noise_sd`` is measurement noise added to each word total.
    """
    if not mean_mora > 0:
        raise ValueError("mean_mora must be positive")
    if not 0.0 <= compensation_strength <= 1.0:
        raise ValueError("compensation_strength must be in [0, 1]")
    if max_moras < 1 or reps < 1:
        raise ValueError("max_moras and reps must be >= 1")
    sd = 0.3 * mean_mora if mora_sd is None else mora_sd
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(reps):
        for n in range(1, max_moras + 1):
            eps = rng.normal(0.0, sd, n)
            noise = rng.normal(0.0, noise_sd) if noise_sd > 0 else 0.0
            total = n * mean_mora + (1.0 - compensation_strength) * float(eps.sum()) + noise
            points.append((n, total))
    return points


def gen_syllable_wav(
    onsets: Sequence[float],
    rise_ms: float = 20.0,
    dur_ms: float = 100.0,
    sample_rate: int = 8000,
    seed: int = 0,
    decay_ms: float = 30.0,
    amplitude: float = 0.5,
    duration: Optional[float] = None,
    band=(300.0, 2000.0),
) -> AudioBuffer:
    """Band-limited noise bursts: linear rise, sustained plateau, linear decay."""
    onsets = [float(t) for t in onsets]
    if not rise_ms > 0:
        raise ValueError("rise_ms must be positive")
    burst = (rise_ms + dur_ms + decay_ms) / 1000.0
    for a, b in zip(onsets, onsets[1:]):
        if not b > a:
            raise ValueError("onsets must be strictly increasing")
        if a + burst > b:
            raise ValueError(f"burst at {a} s overlaps the one at {b} s")
    if onsets and onsets[0] < 0:
        raise ValueError("onsets must be >= 0")
    if duration is None:
        duration = (onsets[-1] + burst + 0.2) if onsets else 1.0
    n = int(round(duration * sample_rate))
    if onsets and onsets[-1] + burst > duration:
        raise ValueError("last burst extends past the requested duration")
    if not onsets:
        return AudioBuffer(np.zeros(n), sample_rate)

    rng = np.random.default_rng(seed)
    sos = butter(4, list(band), btype="bandpass", fs=sample_rate, output="sos")
    noise = sosfiltfilt(sos, rng.standard_normal(n))
    noise /= np.max(np.abs(noise))
    shape = np.zeros(n)
    r = int(round(rise_ms * sample_rate / 1000.0))
    d = int(round(dur_ms * sample_rate / 1000.0))
    f = int(round(decay_ms * sample_rate / 1000.0))
    for onset in onsets:
        i = int(round(onset * sample_rate))
        seg = np.concatenate([
            np.linspace(0.0, 1.0, r, endpoint=False),
            np.ones(d),
            np.linspace(1.0, 0.0, f, endpoint=False) if f else np.zeros(0),
        ])
        end = min(n, i + seg.size)
        shape[i:end] = seg[: end - i]
    samples = amplitude * noise * shape
    return AudioBuffer(samples, sample_rate)
