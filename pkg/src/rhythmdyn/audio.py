"""Mono PCM16 WAV input and output."""

from __future__ import annotations

import io
import os
import wave
from dataclasses import dataclass

import numpy as np


class AudioError(ValueError):
    """Base class for unusable audio input."""


class MonoRequiredError(AudioError):
    pass


class UnsupportedEncodingError(AudioError):
    pass


class EmptyAudioError(AudioError):
    pass


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise MonoRequiredError("mono required")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(self.samples * gain, self.sample_rate)

    def padded(self, seconds: float) -> "AudioBuffer":
        """Prepend ``seconds`` of silence (rounded to whole samples)."""
        n = int(round(seconds * self.sample_rate))
        return AudioBuffer(np.concatenate([np.zeros(n), self.samples]), self.sample_rate)


def load_audio(path) -> AudioBuffer:
    """Read a 16-bit mono PCM WAV file, scaling samples to [-1, 1)."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    try:
        with wave.open(os.fspath(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise UnsupportedEncodingError(f"unsupported encoding: {exc}") from exc
    except EOFError as exc:
        raise EmptyAudioError("empty audio") from exc
    if channels != 1:
        raise MonoRequiredError(f"mono required, file has {channels} channels")
    if width != 2:
        raise UnsupportedEncodingError(f"unsupported encoding: {8 * width}-bit samples, PCM16 required")
    data = np.frombuffer(frames, dtype="<i2")
    if data.size == 0:
        raise EmptyAudioError("empty audio")
    return AudioBuffer(data.astype(float) / 32768.0, rate)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")


def wav_bytes(audio: AudioBuffer, channels: int = 1) -> bytes:
    """Encode as PCM16 WAV. ``channels > 1`` duplicates the signal (test fixtures only)."""
    data = to_pcm16(audio.samples)
    if channels > 1:
        data = np.repeat(data, channels)
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate)
        wf.writeframes(data.tobytes())
    return buf.getvalue()


def write_wav(path, audio: AudioBuffer, channels: int = 1) -> None:
    with open(path, "wb") as fh:
        fh.write(wav_bytes(audio, channels))
