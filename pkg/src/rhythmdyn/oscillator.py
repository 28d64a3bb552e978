"""Adaptive oscillator driven by pulse trains.

The oscillator produces a raised-cosine activation over a phase that runs
from 0 to 1 once per period. Input pulses are added to the activation; in
``phase_reset`` mode a pulse whose sum with the activation exceeds 1 resets
the phase to zero and nudges the period toward the interval observed since
the previous reset. Without input the period relaxes toward its resting
value, one step per free-running cycle.

All state transitions are pure: every operation returns a new
:class:`AdaptiveOscillator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

import numpy as np

TWO_PI = 2.0 * math.pi

PHASE_RESET = "phase_reset"
CONTINUOUS = "continuous"
COUPLING_MODES = (PHASE_RESET, CONTINUOUS)

DEFAULT_ADAPTATION_RATE = 0.3
DEFAULT_DECAY_RATE = 0.05
DEFAULT_RESTING_PERIOD = 0.5
DEFAULT_PERIOD_BOUNDS = (0.1, 2.0)
DEFAULT_CONTINUOUS_GAIN = 0.5
DEFAULT_INTERVAL_TOLERANCE = 0.2

# pulses closer than this fraction of dt to a grid time belong to that step
_EVENT_TOL = 1e-9


def _wrap(phase: float) -> float:
    phase = phase % 1.0
    # tiny negative inputs make % return exactly 1.0
    return 0.0 if phase >= 1.0 else phase


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


@dataclass(frozen=True)
class Pulse:
    time: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.time >= 0.0:
            raise ValueError(f"pulse time must be >= 0, got {self.time}")
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError(f"pulse amplitude must be in (0, 1], got {self.amplitude}")


@dataclass(frozen=True)
class PulseTrain:
    """Ordered pulses with strictly increasing times."""

    pulses: tuple[Pulse, ...] = ()

    def __post_init__(self):
        pulses = tuple(self.pulses)
        object.__setattr__(self, "pulses", pulses)
        for a, b in zip(pulses, pulses[1:]):
            if not b.time > a.time:
                raise ValueError("pulse times must be strictly increasing")

    @classmethod
    def from_arrays(cls, times: Iterable[float], amplitudes: Optional[Iterable[float]] = None) -> "PulseTrain":
        times = [float(t) for t in times]
        if amplitudes is None:
            amps = [1.0] * len(times)
        else:
            amps = [float(a) for a in amplitudes]
            if len(amps) != len(times):
                raise ValueError("times and amplitudes differ in length")
        return cls(tuple(Pulse(t, a) for t, a in zip(times, amps)))

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self) -> Iterator[Pulse]:
        return iter(self.pulses)

    def __getitem__(self, i):
        return self.pulses[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([p.time for p in self.pulses], dtype=float)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.pulses], dtype=float)

    def scaled(self, k: float) -> "PulseTrain":
        """Return the train with every pulse time multiplied by ``k``."""
        return PulseTrain(tuple(Pulse(p.time * k, p.amplitude) for p in self.pulses))


@dataclass(frozen=True)
class AdaptiveOscillator:
    """State and parameters of one adaptive oscillator.

    ``cycle_from_reset`` records whether the current cycle was started by a
    pulse reset. Decay toward the resting period is skipped on the wrap that
    ends such a cycle, so relaxation starts only after a full cycle with no
    input.

    ``last_interval`` is the per-cycle interval used at the previous
    adaptation. An inter-reset interval within ``interval_tolerance`` (as a
    fraction of ``last_interval``) of an integer multiple ``m >= 2`` of it is
    read as ``m`` cycles with missing pulses and divided by ``m`` before
    adapting. A tolerance of 0 disables this.
    """

    phase: float = 0.0
    period: float = DEFAULT_RESTING_PERIOD
    resting_period: float = DEFAULT_RESTING_PERIOD
    adaptation_rate: float = DEFAULT_ADAPTATION_RATE
    decay_rate: float = DEFAULT_DECAY_RATE
    period_bounds: tuple[float, float] = DEFAULT_PERIOD_BOUNDS
    coupling_mode: str = PHASE_RESET
    continuous_gain: float = DEFAULT_CONTINUOUS_GAIN
    interval_tolerance: float = DEFAULT_INTERVAL_TOLERANCE
    last_reset_time: Optional[float] = None
    last_interval: Optional[float] = None
    cycle_from_reset: bool = False

    def __post_init__(self):
        lo, hi = (float(b) for b in self.period_bounds)
        object.__setattr__(self, "period_bounds", (lo, hi))
        if not 0.0 <= self.phase < 1.0:
            raise ValueError(f"phase must be in [0, 1), got {self.phase}")
        if not 0.0 < lo <= hi:
            raise ValueError(f"invalid period bounds {self.period_bounds}")
        if not lo <= self.period <= hi:
            raise ValueError(f"period {self.period} outside bounds {self.period_bounds}")
        if not lo <= self.resting_period <= hi:
            raise ValueError(f"resting period {self.resting_period} outside bounds {self.period_bounds}")
        if not 0.0 <= self.adaptation_rate <= 1.0:
            raise ValueError("adaptation_rate must be in [0, 1]")
        if not 0.0 <= self.decay_rate <= 1.0:
            raise ValueError("decay_rate must be in [0, 1]")
        if self.coupling_mode not in COUPLING_MODES:
            raise ValueError(f"unknown coupling mode {self.coupling_mode!r}")
        if self.continuous_gain < 0.0:
            raise ValueError("continuous_gain must be >= 0")
        if not 0.0 <= self.interval_tolerance < 0.5:
            raise ValueError("interval_tolerance must be in [0, 0.5)")

    @classmethod
    def at_rest(cls, resting_period: float = DEFAULT_RESTING_PERIOD, **params) -> "AdaptiveOscillator":
        """Fresh oscillator at phase 0 whose period equals its resting period."""
        return cls(period=resting_period, resting_period=resting_period, **params)

    def params(self) -> dict:
        return {
            "resting_period": self.resting_period,
            "adaptation_rate": self.adaptation_rate,
            "decay_rate": self.decay_rate,
            "period_bounds": list(self.period_bounds),
            "coupling_mode": self.coupling_mode,
            "continuous_gain": self.continuous_gain,
            "interval_tolerance": self.interval_tolerance,
            "initial_phase": self.phase,
            "initial_period": self.period,
        }

    def scaled(self, k: float) -> "AdaptiveOscillator":
        """Same oscillator on a time axis stretched by ``k``."""
        lo, hi = self.period_bounds
        return replace(
            self,
            period=self.period * k,
            resting_period=self.resting_period * k,
            period_bounds=(lo * k, hi * k),
            last_reset_time=None if self.last_reset_time is None else self.last_reset_time * k,
            last_interval=None if self.last_interval is None else self.last_interval * k,
        )


def activation(phase: float) -> float:
    """Raised cosine, 1 at phase 0 and 0 at phase 0.5."""
    if not 0.0 <= phase < 1.0:
        raise ValueError(f"phase must be in [0, 1), got {phase}")
    return 0.5 * (1.0 + math.cos(TWO_PI * phase))


def _decayed(period: float, osc: AdaptiveOscillator) -> float:
    lo, hi = osc.period_bounds
    return _clamp(period + osc.decay_rate * (osc.resting_period - period), lo, hi)


def _adapted(period: float, interval: float, osc: AdaptiveOscillator) -> float:
    lo, hi = osc.period_bounds
    return _clamp(period + osc.adaptation_rate * (interval - period), lo, hi)


def _advance(phase: float, period: float, from_reset: bool, h: float, osc: AdaptiveOscillator):
    """Advance raw state by ``h`` seconds. Shared by :func:`step` and :func:`entrain`."""
    phase += h / period
    wrapped = 0
    while phase >= 1.0:
        phase -= 1.0
        wrapped += 1
        if not from_reset:
            period = _decayed(period, osc)
        from_reset = False
    return phase, period, from_reset, wrapped


def step(osc: AdaptiveOscillator, dt: float) -> AdaptiveOscillator:
    """Free-run the oscillator for ``dt`` seconds."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    phase, period, from_reset, _ = _advance(osc.phase, osc.period, osc.cycle_from_reset, dt, osc)
    return replace(osc, phase=_wrap(phase), period=period, cycle_from_reset=from_reset)


def per_cycle_interval(interval: float, reference: Optional[float], tolerance: float) -> float:
    """Split ``interval`` into whole cycles of ``reference`` when it is close to a multiple."""
    if reference is None or tolerance <= 0.0 or not reference > 0.0:
        return interval
    ratio = interval / reference
    if not math.isfinite(ratio):
        return interval
    m = math.floor(ratio + 0.5)
    if m >= 2 and abs(interval - m * reference) <= tolerance * reference:
        return interval / m
    return interval


def _reset_update(osc: AdaptiveOscillator, period: float, last_reset: Optional[float],
                  last_interval: Optional[float], now: float):
    interval = None if last_reset is None else now - last_reset
    if interval is not None:
        last_interval = per_cycle_interval(interval, last_interval, osc.interval_tolerance)
        period = _adapted(period, last_interval, osc)
    return period, interval, last_interval


def apply_pulse(osc: AdaptiveOscillator, pulse: Pulse, now: float) -> tuple[AdaptiveOscillator, bool]:
    """Offer a pulse to a phase-reset oscillator.

    Returns the new state and whether the pulse reset the phase.
    """
    if osc.coupling_mode != PHASE_RESET:
        raise ValueError("apply_pulse requires a phase_reset oscillator")
    if activation(osc.phase) + pulse.amplitude <= 1.0:
        return osc, False
    period, _, last_interval = _reset_update(osc, osc.period, osc.last_reset_time, osc.last_interval, now)
    return replace(osc, phase=0.0, period=period, last_reset_time=now, last_interval=last_interval,
                   cycle_from_reset=True), True


def _continuous_update(phase: float, period: float, amplitude: float, osc: AdaptiveOscillator):
    deviation = phase if phase < 0.5 else phase - 1.0
    new_phase = _wrap(phase - osc.continuous_gain * amplitude * math.sin(TWO_PI * phase) / TWO_PI)
    lo, hi = osc.period_bounds
    # early pulse (deviation < 0) means the input runs faster: shorten
    new_period = _clamp(period + osc.adaptation_rate * amplitude * deviation * period, lo, hi)
    return new_phase, new_period


def apply_pulse_continuous(osc: AdaptiveOscillator, pulse: Pulse, now: float) -> AdaptiveOscillator:
    """Graded phase and period correction for a continuously coupled oscillator."""
    if osc.coupling_mode != CONTINUOUS:
        raise ValueError("apply_pulse_continuous requires a continuous oscillator")
    phase, period = _continuous_update(osc.phase, osc.period, pulse.amplitude, osc)
    return replace(osc, phase=phase, period=period)


@dataclass(frozen=True)
class Reset:
    time: float
    interval: Optional[float]
    phase: float
    activation: float
    period: float


@dataclass(frozen=True)
class EntrainmentTrace:
    """Sampled state of a driven oscillator plus every reset event.

    Sample arrays share one index: ``times[i]``, ``phases[i]``, ``periods[i]``
    and ``activations[i]`` describe the oscillator at grid time ``i * dt``.
    """

    times: np.ndarray
    phases: np.ndarray
    periods: np.ndarray
    activations: np.ndarray
    resets: tuple[Reset, ...]
    initial: AdaptiveOscillator
    final: AdaptiveOscillator
    dt: float
    t_end: float
    pulses_seen: int = 0
    wraps: tuple[float, ...] = field(default=())

    @property
    def reset_times(self) -> np.ndarray:
        return np.array([r.time for r in self.resets], dtype=float)

    def to_dict(self) -> dict:
        params = self.initial.params()
        params.update(dt=self.dt, t_end=self.t_end)
        return {
            "params": params,
            "samples": [
                {"t": float(t), "phase": float(ph), "period": float(p), "activation": float(a)}
                for t, ph, p, a in zip(self.times, self.phases, self.periods, self.activations)
            ],
            "resets": [
                {"t": r.time, "interval": r.interval, "phase": r.phase, "activation": r.activation, "period": r.period}
                for r in self.resets
            ],
            "final_period": self.final.period,
        }


def check_step_size(dt: float, p_min: float) -> None:
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > p_min / 10.0 * (1.0 + 1e-12):
        raise ValueError(f"step contract violated: dt={dt} exceeds p_min/10={p_min / 10.0}")


def entrain(osc: AdaptiveOscillator, train: PulseTrain, dt: float, t_end: float) -> EntrainmentTrace:
    """Drive ``osc`` with ``train`` on a fixed grid of step ``dt`` up to ``t_end``.

    Pulses are handled at their exact times: the phase is advanced to the
    pulse, the pulse is applied, and integration continues to the next grid
    point. Samples are recorded at every grid point ``i * dt``.
    """
    check_step_size(dt, osc.period_bounds[0])
    if len(train) and t_end < train[-1].time:
        raise ValueError(f"t_end={t_end} precedes the last pulse at {train[-1].time}")
    if t_end < 0.0:
        raise ValueError("t_end must be >= 0")

    reset_mode = osc.coupling_mode == PHASE_RESET
    phase, period = osc.phase, osc.period
    from_reset = osc.cycle_from_reset
    last_reset = osc.last_reset_time
    last_interval = osc.last_interval
    eps = _EVENT_TOL * dt

    times_out: list[float] = []
    phases_out: list[float] = []
    periods_out: list[float] = []
    resets: list[Reset] = []
    wraps: list[float] = []

    pulses = train.pulses
    n_pulses = len(pulses)
    k = 0
    t = 0.0

    def advance_to(t_target: float) -> None:
        nonlocal phase, period, from_reset, t
        h = t_target - t
        if h > 0.0:
            before = period
            phase, period, from_reset, wrapped = _advance(phase, period, from_reset, h, osc)
            if wrapped:
                wraps.append(t_target - phase * before)
            t = t_target

    def handle(pulse: Pulse) -> None:
        nonlocal phase, period, from_reset, last_reset, last_interval
        now = pulse.time
        if reset_mode:
            act = 0.5 * (1.0 + math.cos(TWO_PI * phase))
            if act + pulse.amplitude > 1.0:
                arrival = phase
                period, interval, last_interval = _reset_update(osc, period, last_reset, last_interval, now)
                resets.append(Reset(now, interval, arrival, act, period))
                phase = 0.0
                last_reset = now
                from_reset = True
        else:
            phase, period = _continuous_update(phase, period, pulse.amplitude, osc)

    def record(t_grid: float) -> None:
        times_out.append(t_grid)
        phases_out.append(phase)
        periods_out.append(period)

    n_steps = int(math.floor(t_end / dt + 1e-9))
    while k < n_pulses and pulses[k].time <= eps:
        handle(pulses[k])
        k += 1
    record(0.0)
    for i in range(1, n_steps + 1):
        t_grid = i * dt
        while k < n_pulses and pulses[k].time <= t_grid + eps:
            advance_to(max(pulses[k].time, t))
            handle(pulses[k])
            k += 1
        advance_to(t_grid)
        t = t_grid
        record(t_grid)
    # pulses past the last grid point but within t_end
    while k < n_pulses and pulses[k].time <= t_end + eps:
        advance_to(max(pulses[k].time, t))
        handle(pulses[k])
        k += 1

    phases_arr = np.array(phases_out, dtype=float)
    final = replace(
        osc,
        phase=_wrap(phase),
        period=period,
        last_reset_time=last_reset,
        last_interval=last_interval,
        cycle_from_reset=from_reset,
    )
    return EntrainmentTrace(
        times=np.array(times_out, dtype=float),
        phases=phases_arr,
        periods=np.array(periods_out, dtype=float),
        activations=0.5 * (1.0 + np.cos(TWO_PI * phases_arr)),
        resets=tuple(resets),
        initial=osc,
        final=final,
        dt=dt,
        t_end=t_end,
        pulses_seen=k,
        wraps=tuple(wraps),
    )


def synchrony_output(trace: EntrainmentTrace, window: int = 4) -> float:
    """Mean activation at pulse arrival over the last ``window`` resets.

    1.0 means every recent pulse landed exactly on zero phase; 0.0 when the
    oscillator was never reset.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    recent = trace.resets[-window:]
    if not recent:
        return 0.0
    return float(sum(r.activation for r in recent) / len(recent))


def free_run_until_wraps(osc: AdaptiveOscillator, n_wraps: int, dt: float) -> tuple[AdaptiveOscillator, list[float]]:
    """Step ``osc`` until it has wrapped ``n_wraps`` times.

    Returns the final state and the period recorded after each wrap.
    """
    periods = []
    while len(periods) < n_wraps:
        before = osc.phase
        osc = step(osc, dt)
        if osc.phase < before:
            periods.append(osc.period)
    return osc, periods
