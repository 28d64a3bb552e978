"""Command-line entry point: ``rhythmdyn <command> ...``.

Exit codes: 0 success, 2 usage or input error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import mode_report, measure_phase, mora_regression, simulate_tempo_discrimination
from .audio import AudioError, load_audio, wav_bytes
from .beats import BeatConfig, extract_beats
from .io import (
    FormatError,
    atomic_write,
    atomic_write_bytes,
    beat_list_csv,
    dumps_json,
    mora_points_csv,
    phase_samples_csv,
    pulse_train_csv,
    read_beat_times,
    read_mora_points,
    read_pulse_train,
)
from .meter import MeterConfig, build_bank, estimate_meter, run_network
from .oscillator import (
    DEFAULT_ADAPTATION_RATE,
    DEFAULT_CONTINUOUS_GAIN,
    DEFAULT_DECAY_RATE,
    DEFAULT_INTERVAL_TOLERANCE,
    DEFAULT_PERIOD_BOUNDS,
    DEFAULT_RESTING_PERIOD,
    AdaptiveOscillator,
    entrain,
)
from .stimuli import (
    drop_pulses,
    gen_hierarchical,
    gen_jittered,
    gen_mora_dataset,
    gen_periodic,
    gen_random,
    gen_syllable_wav,
    gen_take_cards,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- output helpers -------------------------------------------------------

def _meta(args, argv: Sequence[str]) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    return {"tool": "rhythmdyn", "version": __version__, "command": args.command, "argv": list(argv), "params": params}


def _emit_text(text: str, out: Optional[str]) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _emit_json(obj: dict, out: Optional[str]) -> None:
    _emit_text(dumps_json(obj), out)


def _emit_csv_with_sidecar(text: str, sidecar: dict, out: Optional[str]) -> None:
    _emit_text(text, out)
    if out:
        atomic_write(out + ".meta.json", dumps_json(sidecar))


# --- shared option groups -------------------------------------------------

def _add_osc_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("oscillator")
    g.add_argument("--resting-period", type=float, default=DEFAULT_RESTING_PERIOD)
    g.add_argument("--initial-period", type=float, default=None, help="defaults to the resting period")
    g.add_argument("--initial-phase", type=float, default=0.0)
    g.add_argument("--alpha", type=float, default=DEFAULT_ADAPTATION_RATE, help="period adaptation rate")
    g.add_argument("--gamma", type=float, default=DEFAULT_DECAY_RATE, help="decay per free cycle")
    g.add_argument("--p-min", type=float, default=DEFAULT_PERIOD_BOUNDS[0])
    g.add_argument("--p-max", type=float, default=DEFAULT_PERIOD_BOUNDS[1])
    g.add_argument("--mode", choices=["phase_reset", "continuous"], default="phase_reset")
    g.add_argument("--gain", type=float, default=DEFAULT_CONTINUOUS_GAIN, help="continuous-mode phase gain")
    g.add_argument("--interval-tolerance", type=float, default=DEFAULT_INTERVAL_TOLERANCE)


def _osc_from_args(args) -> AdaptiveOscillator:
    return AdaptiveOscillator(
        phase=args.initial_phase,
        period=args.resting_period if args.initial_period is None else args.initial_period,
        resting_period=args.resting_period,
        adaptation_rate=args.alpha,
        decay_rate=args.gamma,
        period_bounds=(args.p_min, args.p_max),
        coupling_mode=args.mode,
        continuous_gain=args.gain,
        interval_tolerance=args.interval_tolerance,
    )


def _add_beat_flags(p: argparse.ArgumentParser) -> None:
    d = BeatConfig()
    g = p.add_argument_group("beat extraction")
    g.add_argument("--bands", type=int, default=d.bands)
    g.add_argument("--lo-hz", type=float, default=d.lo_hz)
    g.add_argument("--hi-hz", type=float, default=d.hi_hz)
    g.add_argument("--smooth1-ms", type=float, default=d.smooth1_ms)
    g.add_argument("--smooth2-ms", type=float, default=d.smooth2_ms)
    g.add_argument("--min-rise-fraction", type=float, default=d.min_rise_fraction)
    g.add_argument("--halfway", choices=["amplitude", "time"], default=d.halfway)


def _beat_config(args) -> BeatConfig:
    return BeatConfig(args.bands, args.lo_hz, args.hi_hz, args.smooth1_ms, args.smooth2_ms,
                      args.min_rise_fraction, args.halfway)


# --- commands ---------------------------------------------------------------

def cmd_entrain(args, argv) -> int:
    train = read_pulse_train(args.train)
    osc = _osc_from_args(args)
    t_end = args.t_end if args.t_end is not None else (train[-1].time if len(train) else 1.0)
    trace = entrain(osc, train, args.dt, t_end)
    doc = trace.to_dict()
    doc["meta"] = _meta(args, argv)
    doc["summary"] = {"pulses": len(train), "resets": len(trace.resets)}
    _emit_json(doc, args.out)
    return EXIT_OK


def cmd_beats(args, argv) -> int:
    audio = load_audio(args.wav)
    cfg = _beat_config(args)
    beats = extract_beats(audio, cfg)
    sidecar = _meta(args, argv)
    sidecar.update(config=cfg.to_dict(), sample_rate=audio.sample_rate,
                   source_duration=beats.source_duration, count=len(beats))
    _emit_csv_with_sidecar(beat_list_csv(beats), sidecar, args.out)
    return EXIT_OK


def cmd_phases(args, argv) -> int:
    targets = read_beat_times(args.beats)
    anchors = read_beat_times(args.anchors)
    if len(anchors) < 2:
        raise UsageError(f"{args.anchors}: need at least 2 anchors, got {len(anchors)}")
    samples, dropped = measure_phase(targets, anchors, args.trial, args.group)
    report = mode_report(samples, args.bandwidth) if samples else None
    doc = {
        "meta": _meta(args, argv),
        "n_samples": len(samples),
        "dropped": dropped,
        "mode_report": report.to_dict() if report else None,
    }
    if args.out:
        atomic_write(args.out, phase_samples_csv(samples))
        atomic_write(args.modes_out or args.out + ".modes.json", dumps_json(doc))
    else:
        sys.stdout.write(phase_samples_csv(samples))
        if args.modes_out:
            atomic_write(args.modes_out, dumps_json(doc))
        else:
            sys.stdout.write(dumps_json(doc))
    return EXIT_OK


def cmd_meter(args, argv) -> int:
    train = read_pulse_train(args.train)
    bank = build_bank(args.beat_range, args.measure_range, args.count, bound_ratio=args.bound_ratio,
                      adaptation_rate=args.alpha, decay_rate=args.gamma)
    cfg = MeterConfig(args.window, args.ratio_tolerance, args.align_fraction, args.min_score, args.threshold)
    traces = run_network(bank, train, args.dt, strong_pulse_threshold=cfg.strong_pulse_threshold)
    result = estimate_meter(traces, bank, train, cfg)
    doc = result.to_dict()
    doc["meta"] = _meta(args, argv)
    _emit_json(doc, args.out)
    return EXIT_OK


def cmd_mora(args, argv) -> int:
    reg = mora_regression(read_mora_points(args.points))
    doc = reg.to_dict()
    doc["meta"] = _meta(args, argv)
    _emit_json(doc, args.out)
    return EXIT_OK


def cmd_discriminate(args, argv) -> int:
    a = read_pulse_train(args.series_a)
    b = read_pulse_train(args.series_b)
    res = simulate_tempo_discrimination(a, b, _osc_from_args(args), args.jnd, args.pause, args.dt,
                                        args.reset_per_series)
    doc = {"answer": res.answer, "period_a": res.period_a, "period_b": res.period_b, "meta": _meta(args, argv)}
    _emit_json(doc, args.out)
    return EXIT_OK


def cmd_stimgen(args, argv) -> int:
    meta = _meta(args, argv)
    kind = args.kind
    if kind in ("periodic", "jittered", "hierarchical", "random"):
        if kind == "periodic":
            train = gen_periodic(args.period, args.count, args.amplitude, args.start)
        elif kind == "jittered":
            train = gen_jittered(args.period, args.count, args.amplitude, args.jitter_sd, args.seed)
        elif kind == "hierarchical":
            train = gen_hierarchical(args.beat_period, args.beats_per_measure, args.strong_amp, args.weak_amp,
                                     args.n_measures, args.downbeat_offset)
        else:
            train = gen_random(args.duration, args.rate, args.seed, (args.amp_lo, args.amp_hi))
        if getattr(args, "drop", None):
            train = drop_pulses(train, args.drop)
        _emit_csv_with_sidecar(pulse_train_csv(train), meta, args.out)
    elif kind == "takecards":
        sched = gen_take_cards(args.phi_target, args.cycle, args.n_reps)
        doc = sched.to_dict()
        doc["meta"] = meta
        _emit_json(doc, args.out)
        if args.anchors_out:
            atomic_write(args.anchors_out, "time_s\n" + "".join(f"{t!r}\n" for t in sched.anchor_times))
        if args.targets_out:
            atomic_write(args.targets_out, "time_s\n" + "".join(f"{t!r}\n" for t in sched.target_times))
    elif kind == "mora":
        pts = gen_mora_dataset(args.mean_mora, args.max_moras, args.reps, args.compensation, args.noise_sd,
                               args.seed, args.mora_sd)
        _emit_csv_with_sidecar(mora_points_csv(pts), meta, args.out)
    elif kind == "wav":
        if args.onsets is not None:
            onsets = args.onsets
        else:
            onsets = [args.start + i * args.period for i in range(args.count)]
        audio = gen_syllable_wav(onsets, args.rise_ms, args.dur_ms, args.sample_rate, args.seed,
                                 args.decay_ms, args.amplitude, args.duration)
        if not args.out:
            raise UsageError("stimgen wav requires --out")
        atomic_write_bytes(args.out, wav_bytes(audio))
        atomic_write(args.out + ".meta.json", dumps_json(meta))
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _defaults() -> dict:
    return {
        "version": __version__,
        "oscillator": AdaptiveOscillator().params(),
        "beats": BeatConfig().to_dict(),
        "meter": {**MeterConfig().to_dict(), "beat_range": [0.2, 0.8], "measure_range": [0.6, 2.4],
                  "count_per_level": 3, "bound_ratio": 4.0},
        "phases": {"bandwidth": 0.02},
        "discriminate": {"jnd": 0.02, "pause_s": 1.5, "dt": 0.001},
        "entrain": {"dt": 0.001},
    }


class _VersionAction(argparse.Action):
    def __init__(self, option_strings, dest=argparse.SUPPRESS, default=argparse.SUPPRESS, help=None):
        super().__init__(option_strings, dest=dest, default=default, nargs=0, help=help)

    def __call__(self, parser, namespace, values, option_string=None):
        sys.stdout.write(dumps_json(_defaults()))
        parser.exit(EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rhythmdyn", description="Adaptive-oscillator rhythm analysis.")
    parser.add_argument("--version", action=_VersionAction, help="print version and parameter defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=False):
        p.add_argument("--out", default=None, help="output path (stdout when omitted)")
        p.add_argument("--config", default=None, help="TOML file of key = value parameter defaults")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("entrain", help="drive an adaptive oscillator with a pulse train")
    p.add_argument("train", help="PulseTrain CSV (time_s,amplitude)")
    _add_osc_flags(p)
    p.add_argument("--dt", type=float, default=0.001)
    p.add_argument("--t-end", type=float, default=None, help="defaults to the last pulse time")
    common(p)
    p.set_defaults(func=cmd_entrain)

    p = sub.add_parser("beats", help="extract acoustic beats from a mono PCM16 WAV")
    p.add_argument("wav")
    _add_beat_flags(p)
    common(p)
    p.set_defaults(func=cmd_beats)

    p = sub.add_parser("phases", help="relative phase of target beats between anchor beats, plus modes")
    p.add_argument("beats", help="CSV with a time_s column (targets)")
    p.add_argument("anchors", help="CSV with a time_s column (anchors)")
    p.add_argument("--bandwidth", type=float, default=0.02)
    p.add_argument("--trial", default="0")
    p.add_argument("--group", default="with-stimulus", choices=["with-stimulus", "post-stimulus", "post-pause"])
    p.add_argument("--modes-out", default=None, help="ModeReport JSON path (default: <out>.modes.json)")
    common(p)
    p.set_defaults(func=cmd_phases)

    p = sub.add_parser("meter", help="two-level meter estimate for a pulse train")
    p.add_argument("train")
    p.add_argument("--beat-range", type=float, nargs=2, default=[0.2, 0.8])
    p.add_argument("--measure-range", type=float, nargs=2, default=[0.6, 2.4])
    p.add_argument("--count", type=int, default=3, help="oscillators per level")
    p.add_argument("--bound-ratio", type=float, default=4.0)
    p.add_argument("--alpha", type=float, default=DEFAULT_ADAPTATION_RATE)
    p.add_argument("--gamma", type=float, default=DEFAULT_DECAY_RATE)
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--ratio-tolerance", type=float, default=0.1)
    p.add_argument("--align-fraction", type=float, default=0.15)
    p.add_argument("--min-score", type=float, default=0.8)
    p.add_argument("--threshold", type=float, default=0.8, help="strong-pulse amplitude gate")
    p.add_argument("--dt", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_meter)

    p = sub.add_parser("mora", help="regress word duration on mora count")
    p.add_argument("points", help="CSV with columns moras,duration_s")
    common(p)
    p.set_defaults(func=cmd_mora)

    p = sub.add_parser("discriminate", help="simulate a tempo discrimination trial")
    p.add_argument("series_a")
    p.add_argument("series_b")
    _add_osc_flags(p)
    p.add_argument("--jnd", type=float, default=0.02)
    p.add_argument("--pause", type=float, default=1.5)
    p.add_argument("--dt", type=float, default=0.001)
    p.add_argument("--reset-per-series", action="store_true")
    common(p)
    p.set_defaults(func=cmd_discriminate)

    p = sub.add_parser("stimgen", help="generate stimuli")
    kinds = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)

    k = kinds.add_parser("periodic")
    k.add_argument("--period", type=float, required=True)
    k.add_argument("--count", type=int, required=True)
    k.add_argument("--amplitude", type=float, default=1.0)
    k.add_argument("--start", type=float, default=0.0)
    k.add_argument("--drop", type=int, nargs="*", default=[])
    common(k)

    k = kinds.add_parser("jittered")
    k.add_argument("--period", type=float, required=True)
    k.add_argument("--count", type=int, required=True)
    k.add_argument("--amplitude", type=float, default=1.0)
    k.add_argument("--jitter-sd", type=float, default=0.0)
    k.add_argument("--drop", type=int, nargs="*", default=[])
    common(k, seed=True)

    k = kinds.add_parser("hierarchical")
    k.add_argument("--beat-period", type=float, required=True)
    k.add_argument("--beats-per-measure", type=int, required=True)
    k.add_argument("--strong-amp", type=float, default=1.0)
    k.add_argument("--weak-amp", type=float, default=0.5)
    k.add_argument("--n-measures", type=int, default=8)
    k.add_argument("--downbeat-offset", type=int, default=0)
    common(k)

    k = kinds.add_parser("random")
    k.add_argument("--duration", type=float, default=10.0)
    k.add_argument("--rate", type=float, default=2.5, help="mean pulses per second")
    k.add_argument("--amp-lo", type=float, default=0.2)
    k.add_argument("--amp-hi", type=float, default=1.0)
    common(k, seed=True)

    k = kinds.add_parser("takecards")
    k.add_argument("--phi-target", type=float, required=True)
    k.add_argument("--cycle", type=float, default=1.5)
    k.add_argument("--n-reps", type=int, default=8)
    k.add_argument("--anchors-out", default=None)
    k.add_argument("--targets-out", default=None)
    common(k)

    k = kinds.add_parser("mora")
    k.add_argument("--mean-mora", type=float, default=0.15)
    k.add_argument("--max-moras", type=int, default=7)
    k.add_argument("--reps", type=int, default=20)
    k.add_argument("--compensation", type=float, default=1.0)
    k.add_argument("--noise-sd", type=float, default=0.0)
    k.add_argument("--mora-sd", type=float, default=None)
    common(k, seed=True)

    k = kinds.add_parser("wav")
    k.add_argument("--onsets", type=float, nargs="*", default=None)
    k.add_argument("--period", type=float, default=0.3)
    k.add_argument("--count", type=int, default=5)
    k.add_argument("--start", type=float, default=0.3)
    k.add_argument("--rise-ms", type=float, default=20.0)
    k.add_argument("--dur-ms", type=float, default=100.0)
    k.add_argument("--decay-ms", type=float, default=30.0)
    k.add_argument("--amplitude", type=float, default=0.5)
    k.add_argument("--sample-rate", type=int, default=8000)
    k.add_argument("--duration", type=float, default=None)
    common(k, seed=True)

    p.set_defaults(func=cmd_stimgen)
    return parser


def _find_subparser(parser: argparse.ArgumentParser, args) -> argparse.ArgumentParser:
    chain = [args.command] + ([args.kind] if getattr(args, "kind", None) else [])
    current = parser
    for name in chain:
        action = next(a for a in current._actions if isinstance(a, argparse._SubParsersAction))
        current = action.choices[name]
    return current


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _load_config(args.config)
        sub = _find_subparser(parser, args)
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"{args.config}: unknown parameters {unknown}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        return args.func(args, argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, FormatError, AudioError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"rhythmdyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to exit 1
        print(f"rhythmdyn: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


def run() -> None:
    sys.exit(main())
