import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhythmdyn.oscillator import (
    CONTINUOUS,
    AdaptiveOscillator,
    Pulse,
    PulseTrain,
    activation,
    apply_pulse,
    apply_pulse_continuous,
    check_step_size,
    entrain,
    free_run_until_wraps,
    per_cycle_interval,
    step,
    synchrony_output,
)
from rhythmdyn.stimuli import drop_pulses, gen_jittered, gen_periodic

DT = 0.001


# --------------------------------------------------------------- data types
def test_pulse_rejects_bad_amplitude():
    with pytest.raises(ValueError):
        Pulse(0.0, 0.0)
    with pytest.raises(ValueError):
        Pulse(0.0, 1.5)


def test_pulse_train_requires_increasing_times():
    with pytest.raises(ValueError):
        PulseTrain((Pulse(1.0, 1.0), Pulse(1.0, 1.0)))
    with pytest.raises(ValueError):
        PulseTrain.from_arrays([0.5, 0.2])


def test_pulse_train_arrays_round_trip():
    train = PulseTrain.from_arrays([0.0, 0.5, 1.2], [1.0, 0.5, 0.25])
    np.testing.assert_array_equal(train.times, [0.0, 0.5, 1.2])
    np.testing.assert_array_equal(train.amplitudes, [1.0, 0.5, 0.25])
    assert len(train) == 3


def test_oscillator_validates_state():
    with pytest.raises(ValueError):
        AdaptiveOscillator(phase=1.0)
    with pytest.raises(ValueError):
        AdaptiveOscillator(period=3.0)
    with pytest.raises(ValueError):
        AdaptiveOscillator(coupling_mode="bogus")


# --------------------------------------------------------------- activation
@pytest.mark.parametrize("phase, expected", [(0.0, 1.0), (0.5, 0.0), (0.25, 0.5)])
def test_activation_landmarks(phase, expected):
    assert activation(phase) == pytest.approx(expected, abs=1e-15)


def test_activation_at_tenth_of_cycle():
    assert activation(0.1) == pytest.approx((1 + math.cos(0.2 * math.pi)) / 2, abs=1e-15)
    assert activation(0.1) == pytest.approx(0.9045, abs=5e-5)


@pytest.mark.parametrize("phase", [-0.01, 1.0, 1.5])
def test_activation_domain(phase):
    with pytest.raises(ValueError):
        activation(phase)


@given(st.floats(min_value=1e-9, max_value=1.0 - 1e-9))
def test_activation_is_symmetric(phase):
    assert activation(phase) == pytest.approx(activation(1.0 - phase), abs=1e-12)


# --------------------------------------------------------------- step
def test_step_half_cycle_without_decay():
    osc = step(AdaptiveOscillator(phase=0.0, period=0.5, decay_rate=0.0), 0.25)
    assert osc.phase == pytest.approx(0.5)
    assert osc.period == 0.5


def test_step_full_decay_snaps_to_rest_on_wrap():
    osc = AdaptiveOscillator(phase=0.9, period=0.5, resting_period=0.6, decay_rate=1.0)
    for _ in range(5):
        osc = step(osc, 0.01)
    assert osc.phase == pytest.approx(0.0, abs=1e-9)
    assert osc.period == pytest.approx(0.6)


def test_free_run_decay_matches_geometric_oracle():
    osc = AdaptiveOscillator(phase=0.0, period=0.6, resting_period=0.5, decay_rate=0.1)
    _, periods = free_run_until_wraps(osc, 10, DT)
    oracle = [0.5 + 0.1 * 0.9 ** n for n in range(1, 11)]
    np.testing.assert_allclose(periods, oracle, atol=1e-12)
    assert periods[-1] == pytest.approx(0.5349, abs=5e-5)


def test_step_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        step(AdaptiveOscillator(), 0.0)


def test_step_contract():
    check_step_size(0.01, 0.1)
    with pytest.raises(ValueError, match="step contract violated"):
        check_step_size(0.02, 0.1)


def test_first_wrap_after_reset_is_not_decayed():
    osc = AdaptiveOscillator(phase=0.0, period=0.6, resting_period=0.5, decay_rate=0.5, cycle_from_reset=True)
    _, periods = free_run_until_wraps(osc, 2, DT)
    assert periods == pytest.approx([0.6, 0.55])


# --------------------------------------------------------------- apply_pulse
def test_antiphase_full_pulse_does_not_reset():
    osc = AdaptiveOscillator(phase=0.5)
    new, flag = apply_pulse(osc, Pulse(1.0, 1.0), 1.0)
    assert not flag and new == osc


def test_pulse_above_threshold_resets():
    new, flag = apply_pulse(AdaptiveOscillator(phase=0.1), Pulse(1.0, 0.6), 1.0)
    assert flag and new.phase == 0.0 and new.last_reset_time == 1.0


def test_weak_pulse_below_threshold_is_ignored():
    # activation(0.1) + 0.05 = 0.9545, not above 1
    _, flag = apply_pulse(AdaptiveOscillator(phase=0.1), Pulse(1.0, 0.05), 1.0)
    assert not flag


def test_reset_adapts_period_to_observed_interval():
    osc = AdaptiveOscillator(phase=0.1, period=0.5, adaptation_rate=0.5, last_reset_time=1.0)
    new, flag = apply_pulse(osc, Pulse(1.6, 1.0), 1.6)
    assert flag
    assert new.period == pytest.approx(0.55)


def test_first_reset_adapts_nothing():
    new, _ = apply_pulse(AdaptiveOscillator(phase=0.2, period=0.5), Pulse(3.0, 1.0), 3.0)
    assert new.period == 0.5


def test_apply_pulse_requires_reset_mode():
    with pytest.raises(ValueError):
        apply_pulse(AdaptiveOscillator(coupling_mode=CONTINUOUS), Pulse(0.0, 1.0), 0.0)


@pytest.mark.parametrize(
    "interval, reference, expected",
    [(1.2, 0.6, 0.6), (1.8, 0.6, 0.6), (0.65, 0.6, 0.65), (1.0, 0.6, 1.0), (1.2, None, 1.2)],
)
def test_per_cycle_interval(interval, reference, expected):
    assert per_cycle_interval(interval, reference, 0.2) == pytest.approx(expected)


# --------------------------------------------------------------- continuous
def _continuous(phase, **kw):
    return AdaptiveOscillator(phase=phase, coupling_mode=CONTINUOUS, continuous_gain=0.5, **kw)


def test_continuous_zero_phase_is_fixed_point():
    new = apply_pulse_continuous(_continuous(0.0), Pulse(0.0, 0.7), 0.0)
    assert new.phase == 0.0 and new.period == 0.5


def test_continuous_quarter_phase_nudged_back():
    new = apply_pulse_continuous(_continuous(0.25, adaptation_rate=0.0), Pulse(0.0, 1.0), 0.0)
    assert new.phase == pytest.approx(0.25 - 0.5 / (2 * math.pi), abs=1e-12)
    assert new.phase == pytest.approx(0.1704, abs=5e-5)


def test_continuous_three_quarter_phase_nudged_forward():
    new = apply_pulse_continuous(_continuous(0.75, adaptation_rate=0.0), Pulse(0.0, 1.0), 0.0)
    assert new.phase == pytest.approx(0.75 + 0.5 / (2 * math.pi), abs=1e-12)
    assert new.phase == pytest.approx(0.8296, abs=5e-5)


def test_continuous_period_moves_toward_input():
    # late pulse (phase just past 0.5 of the cycle measured from the front) lengthens;
    # early pulse (phase near 1) shortens
    late = apply_pulse_continuous(_continuous(0.2), Pulse(0.0, 1.0), 0.0)
    early = apply_pulse_continuous(_continuous(0.8), Pulse(0.0, 1.0), 0.0)
    assert late.period > 0.5 > early.period


def test_continuous_mode_entrains_to_periodic_input():
    train = gen_periodic(0.55, 40, start_time=0.3)
    tr = entrain(_continuous(0.0), train, DT, train[-1].time)
    assert abs(tr.final.period - 0.55) < 0.02
    assert not tr.resets


# --------------------------------------------------------------- entrain
def test_entrain_free_running_wraps_on_schedule():
    tr = entrain(AdaptiveOscillator(decay_rate=0.0), PulseTrain(), DT, 1.0)
    assert not tr.resets
    assert tr.wraps == pytest.approx((0.5, 1.0), abs=1e-9)
    assert tr.phases[500] == pytest.approx(0.0, abs=1e-9) or tr.phases[500] == pytest.approx(1.0, abs=1e-9)


def test_entrain_converges_to_periodic_input():
    train = gen_periodic(0.6, 11, start_time=0.3)
    tr = entrain(AdaptiveOscillator(decay_rate=0.0, adaptation_rate=0.3), train, DT, train[-1].time)
    assert len(tr.resets) == 11
    assert abs(tr.final.period - 0.6) < 0.012


def test_entrain_survives_two_missing_pulses():
    train = drop_pulses(gen_periodic(0.6, 11, start_time=0.3), [4, 5])
    tr = entrain(AdaptiveOscillator(decay_rate=0.0), train, DT, train[-1].time)
    assert len(tr.resets) == len(train)
    assert abs(tr.final.period - 0.6) / 0.6 < 0.05


def test_entrain_rejects_large_step():
    with pytest.raises(ValueError, match="step contract"):
        entrain(AdaptiveOscillator(), gen_periodic(0.5, 3), 0.05, 1.0)


def test_entrain_rejects_early_end():
    with pytest.raises(ValueError):
        entrain(AdaptiveOscillator(), gen_periodic(0.5, 3), DT, 0.5)


def test_entrain_is_deterministic():
    train = gen_jittered(0.5, 30, jitter_sd=0.02, seed=4)
    a = entrain(AdaptiveOscillator(), train, DT, train[-1].time)
    b = entrain(AdaptiveOscillator(), train, DT, train[-1].time)
    np.testing.assert_array_equal(a.phases, b.phases)
    np.testing.assert_array_equal(a.periods, b.periods)
    assert a.resets == b.resets
    assert a.to_dict() == b.to_dict()


@settings(max_examples=40, deadline=None)
@given(
    times=st.lists(st.floats(min_value=0.0, max_value=6.0), min_size=0, max_size=25, unique=True),
    amps=st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=25, max_size=25),
    rest=st.floats(min_value=0.2, max_value=1.5),
)
def test_trace_state_stays_in_range(times, amps, rest):
    times = sorted(times)
    train = PulseTrain.from_arrays(times, amps[: len(times)])
    tr = entrain(AdaptiveOscillator.at_rest(rest), train, 0.005, 6.0)
    assert np.all((tr.phases >= 0.0) & (tr.phases < 1.0))
    lo, hi = tr.initial.period_bounds
    assert np.all((tr.periods >= lo) & (tr.periods <= hi))


@settings(max_examples=40, deadline=None)
@given(
    T=st.floats(min_value=0.3, max_value=1.2),
    p0=st.floats(min_value=0.3, max_value=1.2),
    alpha=st.floats(min_value=0.05, max_value=0.9),
)
def test_geometric_convergence(T, p0, alpha):
    osc = AdaptiveOscillator.at_rest(p0, adaptation_rate=alpha, decay_rate=0.0, interval_tolerance=0.0)
    train = gen_periodic(T, 12)
    tr = entrain(osc, train, 0.002, train[-1].time)
    assert len(tr.resets) == 12
    # the first reset carries no interval; each later reset contracts the error by (1 - alpha)
    errors = [abs(r.period - T) for r in tr.resets]
    for n, err in enumerate(errors[1:], start=1):
        assert err <= (1 - alpha) ** n * abs(p0 - T) + 1e-9


@pytest.mark.parametrize("k", [0.5, 1.7, 3.0])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_time_scale_invariance(k, seed):
    train = gen_jittered(0.5, 15, jitter_sd=0.03, seed=seed)
    osc = AdaptiveOscillator.at_rest(0.45)
    base = entrain(osc, train, DT, 8.0)
    scaled = entrain(osc.scaled(k), train.scaled(k), DT * k, 8.0 * k)
    np.testing.assert_allclose(scaled.times, base.times * k, rtol=1e-12)
    # phase is circular: a sample landing on a wrap may read 1 - eps in one run and 0 in the other
    d = np.abs(scaled.phases - base.phases)
    assert np.max(np.minimum(d, 1.0 - d)) <= 1e-9
    np.testing.assert_allclose(scaled.periods, base.periods * k, rtol=1e-9)


def test_decay_is_monotone_without_input():
    osc = AdaptiveOscillator(period=1.4, resting_period=0.5)
    tr = entrain(osc, PulseTrain(), DT, 30.0)
    dist = np.abs(tr.periods - 0.5)
    assert np.all(np.diff(dist) <= 0.0)
    assert dist[-1] < dist[0]


def test_jitter_is_smoothed_in_most_runs():
    T = 0.5
    sd = 0.05 * T
    hits = 0
    for seed in range(100):
        train = gen_jittered(T, 20, jitter_sd=sd, seed=seed)
        tr = entrain(AdaptiveOscillator.at_rest(0.45), train, DT, train[-1].time)
        hits += abs(tr.final.period - T) < sd
    assert hits >= 90


# --------------------------------------------------------------- synchrony
def test_synchrony_perfect_alignment():
    train = gen_periodic(0.5, 8)
    tr = entrain(AdaptiveOscillator(decay_rate=0.0), train, DT, train[-1].time)
    assert synchrony_output(tr) == pytest.approx(1.0, abs=1e-9)


def test_synchrony_without_resets_is_zero():
    tr = entrain(AdaptiveOscillator(), PulseTrain(), DT, 1.0)
    assert synchrony_output(tr) == 0.0


def test_synchrony_at_quarter_phase_arrivals():
    # pulses arrive a quarter cycle into a 0.5 s oscillator that cannot adapt
    train = gen_periodic(0.125, 1, start_time=0.125)
    train = PulseTrain(tuple(train) + tuple(Pulse(0.125 + 0.125 * i, 1.0) for i in range(1, 6)))
    tr = entrain(AdaptiveOscillator(adaptation_rate=0.0, decay_rate=0.0), train, DT, train[-1].time)
    assert [r.phase for r in tr.resets] == pytest.approx([0.25] * 6, abs=1e-9)
    assert synchrony_output(tr, window=4) == pytest.approx(0.5, abs=1e-9)


def test_trace_to_dict_shape():
    tr = entrain(AdaptiveOscillator(), gen_periodic(0.5, 3), DT, 1.0)
    d = tr.to_dict()
    assert set(d) == {"params", "samples", "resets", "final_period"}
    assert len(d["samples"]) == 1001
    assert len(d["resets"]) == 3


def test_near_coincident_pulses_do_not_overflow_interval_split():
    train = PulseTrain.from_arrays([0.0, 5e-324, 1.0])
    tr = entrain(AdaptiveOscillator.at_rest(1.0), train, 0.005, 2.0)
    lo, hi = tr.initial.period_bounds
    assert lo <= tr.final.period <= hi
