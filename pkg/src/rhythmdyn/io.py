"""CSV/JSON readers and writers for the exchange formats."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import PhaseSample
from .beats import Beat, BeatList
from .oscillator import Pulse, PulseTrain

PULSE_HEADER = ["time_s", "amplitude"]
BEAT_HEADER = ["time_s", "magnitude"]
PHASE_HEADER = ["trial", "group", "phi"]


class FormatError(ValueError):
    """Malformed input file."""


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _read_rows(path, header: Sequence[str]) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != list(header):
                raise FormatError(f"{path}: expected header {','.join(header)}, got {reader.fieldnames}")
            return list(reader)
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not a text CSV file") from exc


def pulse_train_csv(train: PulseTrain) -> str:
    return _csv_text(PULSE_HEADER, ((p.time, p.amplitude) for p in train))


def read_pulse_train(path) -> PulseTrain:
    rows = _read_rows(path, PULSE_HEADER)
    try:
        return PulseTrain(tuple(Pulse(float(r["time_s"]), float(r["amplitude"])) for r in rows))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def beat_list_csv(beats: BeatList) -> str:
    return _csv_text(BEAT_HEADER, ((b.time, b.magnitude) for b in beats))


def read_beat_times(path) -> list[float]:
    """Beat times from a BeatList CSV. A bare ``time_s`` column is also accepted."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "time_s" not in [f.strip() for f in reader.fieldnames]:
                raise FormatError(f"{path}: missing time_s column")
            rows = list(reader)
        return [float(r["time_s"]) for r in rows]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: {exc}") from exc


def read_beat_list(path, source_duration: float | None = None) -> BeatList:
    rows = _read_rows(path, BEAT_HEADER)
    try:
        beats = tuple(Beat(float(r["time_s"]), float(r["magnitude"])) for r in rows)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    duration = source_duration if source_duration is not None else (beats[-1].time if beats else 0.0)
    return BeatList(beats, duration)


def phase_samples_csv(samples: Sequence[PhaseSample]) -> str:
    return _csv_text(PHASE_HEADER, ((s.trial_id, s.group_tag, s.phi) for s in samples))


def read_phase_samples(path) -> list[PhaseSample]:
    rows = _read_rows(path, PHASE_HEADER)
    try:
        return [PhaseSample(float(r["phi"]), r["trial"], r["group"]) for r in rows]
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def mora_points_csv(points) -> str:
    return _csv_text(["moras", "duration_s"], ((int(n), float(d)) for n, d in points))


def read_mora_points(path) -> list[tuple[int, float]]:
    rows = _read_rows(path, ["moras", "duration_s"])
    try:
        return [(int(r["moras"]), float(r["duration_s"])) for r in rows]
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
