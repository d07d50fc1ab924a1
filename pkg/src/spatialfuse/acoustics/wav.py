"""16-bit PCM mono WAV input/output on top of the stdlib ``wave`` module."""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import TruncatedWavError, UnsupportedChannelsError, UnsupportedEncodingError, WavError
from ..fileio import atomic_write_bytes


@dataclass(frozen=True)
class Waveform:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        s = self.samples
        if s.ndim != 1 or s.size == 0:
            raise ValueError(f"waveform must be a non-empty 1-D array, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("waveform has non-finite samples")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def decode_wav(data: bytes) -> Waveform:
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            channels, width = wf.getnchannels(), wf.getsampwidth()
            rate, nframes = wf.getframerate(), wf.getnframes()
            if channels != 1:
                raise UnsupportedChannelsError(f"expected mono audio, got {channels} channels")
            if width != 2:
                raise UnsupportedEncodingError(f"expected 16-bit PCM, got {8 * width}-bit samples")
            frames = wf.readframes(nframes)
    except wave.Error as exc:
        msg = str(exc)
        if "unknown format" in msg:
            raise UnsupportedEncodingError(f"unsupported WAV encoding ({msg})") from None
        raise WavError(f"not a RIFF/WAVE file: {msg}") from None
    except EOFError:
        raise TruncatedWavError("WAV header chunks are truncated") from None
    if len(frames) < 2 * nframes:
        raise TruncatedWavError(f"data chunk holds {len(frames) // 2} of {nframes} declared samples")
    if nframes == 0:
        raise WavError("WAV file contains no samples")
    pcm = np.frombuffer(frames, dtype="<i2").astype(np.float64)
    return Waveform(rate, pcm / 32768.0)


def read_wav(path) -> Waveform:
    return decode_wav(Path(path).read_bytes())


def encode_wav(w: Waveform) -> bytes:
    pcm = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(w.sample_rate))
        wf.writeframes(pcm.tobytes())
    return buf.getvalue()


def write_wav(path, w: Waveform) -> None:
    atomic_write_bytes(path, encode_wav(w))
