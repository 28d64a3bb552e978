"""Two-level meter induction with a bank of adaptive oscillators.

Beat-level candidates hear every pulse; measure-level candidates hear only
pulses at or above a strength threshold. Each oscillator entrains on its own.
The winner at each level is the oscillator that best predicts its recent
input, and a meter is reported only when the winners' periods stand in an
integer ratio and their resets line up on the downbeats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .oscillator import AdaptiveOscillator, EntrainmentTrace, PulseTrain, entrain, synchrony_output

BEAT = "beat"
MEASURE = "measure"


@dataclass(frozen=True)
class OscillatorBank:
    oscillators: tuple[AdaptiveOscillator, ...]
    level_tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.oscillators) != len(self.level_tags):
            raise ValueError("one level tag per oscillator required")
        for tag in self.level_tags:
            if tag not in (BEAT, MEASURE):
                raise ValueError(f"unknown level tag {tag!r}")
        for level in (BEAT, MEASURE):
            rests = [o.resting_period for o, t in zip(self.oscillators, self.level_tags) if t == level]
            if not rests:
                raise ValueError(f"bank has no {level}-level oscillator")
            if any(b <= a for a, b in zip(rests, rests[1:])):
                raise ValueError(f"{level}-level resting periods must be strictly increasing")

    def level(self, tag: str) -> list[int]:
        return [i for i, t in enumerate(self.level_tags) if t == tag]

    @property
    def min_period(self) -> float:
        return min(o.period_bounds[0] for o in self.oscillators)

    def scaled(self, k: float) -> "OscillatorBank":
        return OscillatorBank(tuple(o.scaled(k) for o in self.oscillators), self.level_tags)


def _geometric(lo: float, hi: float, count: int) -> list[float]:
    if count == 1:
        return [math.sqrt(lo * hi)]
    return [lo * (hi / lo) ** (i / (count - 1)) for i in range(count)]


def build_bank(
    beat_range: Sequence[float] = (0.2, 0.8),
    measure_range: Sequence[float] = (0.6, 2.4),
    count_per_level: int = 3,
    bound_ratio: float = 4.0,
    **osc_params,
) -> OscillatorBank:
    """Geometrically spaced resting periods per level.

    Every oscillator gets period bounds ``[rest / bound_ratio, rest * bound_ratio]``
    so the bank behaves the same at any tempo. ``osc_params`` are shared
    :class:`AdaptiveOscillator` fields (adaptation_rate, decay_rate, ...).
    """
    if count_per_level < 1:
        raise ValueError("count_per_level must be >= 1")
    for lo, hi in (beat_range, measure_range):
        if not 0.0 < lo <= hi:
            raise ValueError(f"invalid period range ({lo}, {hi})")
    if count_per_level > 1 and (beat_range[0] == beat_range[1] or measure_range[0] == measure_range[1]):
        raise ValueError("a degenerate range cannot hold more than one oscillator")
    if bound_ratio < 1.0:
        raise ValueError("bound_ratio must be >= 1")
    osc_params.pop("period_bounds", None)
    oscs, tags = [], []
    for tag, (lo, hi) in ((BEAT, beat_range), (MEASURE, measure_range)):
        for rest in _geometric(float(lo), float(hi), count_per_level):
            oscs.append(
                AdaptiveOscillator.at_rest(rest, period_bounds=(rest / bound_ratio, rest * bound_ratio), **osc_params)
            )
            tags.append(tag)
    return OscillatorBank(tuple(oscs), tuple(tags))


def gate(train: PulseTrain, threshold: float) -> PulseTrain:
    return PulseTrain(tuple(p for p in train if p.amplitude >= threshold))


def run_network(
    bank: OscillatorBank,
    train: PulseTrain,
    dt: Optional[float] = None,
    t_end: Optional[float] = None,
    strong_pulse_threshold: float = 0.8,
) -> list[EntrainmentTrace]:
    """Drive every oscillator independently; measure candidates hear strong pulses only."""
    if dt is None:
        dt = bank.min_period / 10.0
    if t_end is None:
        t_end = train[-1].time if len(train) else 0.0
    strong = gate(train, strong_pulse_threshold)
    return [
        entrain(osc, train if tag == BEAT else strong, dt, t_end)
        for osc, tag in zip(bank.oscillators, bank.level_tags)
    ]


def harmonicity(p_hi: float, p_lo: float) -> tuple[int, float]:
    """Nearest integer ratio of two periods and the distance to it (ties round up)."""
    if not (p_hi > 0 and p_lo > 0):
        raise ValueError("periods must be positive")
    if p_hi < p_lo:
        raise ValueError("p_hi must be >= p_lo")
    r = p_hi / p_lo
    n = max(1, math.floor(r + 0.5))
    return n, abs(r - n)


@dataclass(frozen=True)
class MeterConfig:
    window: int = 4
    ratio_tolerance: float = 0.1
    align_fraction: float = 0.15
    min_score: float = 0.8
    strong_pulse_threshold: float = 0.8

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "ratio_tolerance": self.ratio_tolerance,
            "align_fraction": self.align_fraction,
            "min_score": self.min_score,
            "strong_pulse_threshold": self.strong_pulse_threshold,
        }


@dataclass(frozen=True)
class MeterEstimate:
    beat_period: float
    measure_period: float
    beats_per_measure: int
    downbeat_time: float
    beat_score: float
    measure_score: float
    harmonicity_error: float
    beat_index: int = -1
    measure_index: int = -1

    def to_dict(self) -> dict:
        return {
            "beat_period_s": self.beat_period,
            "measure_period_s": self.measure_period,
            "beats_per_measure": self.beats_per_measure,
            "downbeat_time_s": self.downbeat_time,
            "scores": {"beat": self.beat_score, "measure": self.measure_score},
            "harmonicity_error": self.harmonicity_error,
        }


@dataclass(frozen=True)
class NoMeter:
    reason: str
    beat_period: Optional[float] = None
    beat_score: Optional[float] = None

    def to_dict(self) -> dict:
        out: dict = {"no_meter": self.reason}
        if self.beat_period is not None:
            out["beat_period_s"] = self.beat_period
            out["scores"] = {"beat": self.beat_score}
        return out


def coverage(trace: EntrainmentTrace, pulse_times: np.ndarray, count: int) -> float:
    """Fraction of the last ``count`` input pulses that reset the oscillator."""
    recent = pulse_times[-count:]
    if recent.size == 0:
        return 0.0
    resets = trace.reset_times
    return float(np.isin(recent, resets).sum() / recent.size)


@dataclass(frozen=True)
class _Candidate:
    index: int
    synchrony: float
    coverage: float
    period: float

    @property
    def score(self) -> float:
        return self.synchrony * self.coverage


def _select(traces, indices, pulse_times, window) -> Optional[_Candidate]:
    best: Optional[_Candidate] = None
    for i in indices:
        tr = traces[i]
        if len(tr.resets) < window:
            continue
        c = _Candidate(i, synchrony_output(tr, window), coverage(tr, pulse_times, 2 * window), tr.final.period)
        # equal scores: prefer the longer period (the slowest level that still explains every pulse)
        if best is None or c.score > best.score + 1e-9 or (
            abs(c.score - best.score) <= 1e-9 and c.period > best.period
        ):
            best = c
    return best


def estimate_meter(
    traces: Sequence[EntrainmentTrace],
    bank: OscillatorBank,
    train: PulseTrain,
    config: Optional[MeterConfig] = None,
) -> MeterEstimate | NoMeter:
    """Pick a winner per level and check the integer-ratio and alignment constraints.

    Candidates are ranked by synchrony over their last ``window`` resets
    times the fraction of their recent input pulses that reset them. A
    :class:`NoMeter` result names the first constraint that failed.
    """
    cfg = config or MeterConfig()
    if len(traces) != len(bank.oscillators):
        raise ValueError("one trace per oscillator required")
    if len(train) == 0:
        return NoMeter("empty input")
    all_times = train.times
    strong_times = gate(train, cfg.strong_pulse_threshold).times

    beat = _select(traces, bank.level(BEAT), all_times, cfg.window)
    if beat is None or beat.synchrony < cfg.min_score or beat.coverage < cfg.min_score:
        return NoMeter("no beat-level oscillator is entrained")
    found = dict(beat_period=beat.period, beat_score=beat.synchrony)

    if strong_times.size == 0:
        return NoMeter("no pulse passes the strength gate", **found)
    measure = _select(traces, bank.level(MEASURE), strong_times, cfg.window)
    if measure is None or measure.synchrony < cfg.min_score or measure.coverage < cfg.min_score:
        return NoMeter("no measure-level oscillator is entrained", **found)
    if measure.period < beat.period * 1.5:
        return NoMeter("measure period is not a multiple of the beat period", **found)

    ratio, err = harmonicity(measure.period, beat.period)
    if err > cfg.ratio_tolerance:
        return NoMeter(f"period ratio off integer by {err:.3f}", **found)

    window = cfg.align_fraction * beat.period
    beat_resets = traces[beat.index].reset_times
    measure_resets = traces[measure.index].reset_times[-cfg.window:]
    for t in measure_resets:
        if np.min(np.abs(beat_resets - t)) > window:
            return NoMeter("downbeats do not line up with beats", **found)

    return MeterEstimate(
        beat_period=beat.period,
        measure_period=measure.period,
        beats_per_measure=ratio,
        downbeat_time=float(measure_resets[-1]),
        beat_score=beat.synchrony,
        measure_score=measure.synchrony,
        harmonicity_error=err,
        beat_index=beat.index,
        measure_index=measure.index,
    )


def find_meter(
    train: PulseTrain,
    bank: Optional[OscillatorBank] = None,
    config: Optional[MeterConfig] = None,
    dt: Optional[float] = None,
) -> MeterEstimate | NoMeter:
    """Build (or reuse) a bank, run it on ``train`` and estimate the meter."""
    cfg = config or MeterConfig()
    bank = bank or build_bank()
    traces = run_network(bank, train, dt, strong_pulse_threshold=cfg.strong_pulse_threshold)
    return estimate_meter(traces, bank, train, cfg)
