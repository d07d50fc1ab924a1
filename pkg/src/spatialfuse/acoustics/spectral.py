"""STFT, HTK mel filterbank, mel spectrogram and mel cepstrum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.signal import get_window

from ..errors import SignalTooShortError
from .wav import Waveform

FLOOR = 1e-10


@dataclass(frozen=True)
class SpectrogramConfig:
    fft: int = 1024
    hop: int = 256
    win: int = 1024
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float | None = None  # None means sr / 2

    def __post_init__(self):
        if self.fft & (self.fft - 1) or self.fft < 2:
            raise ValueError(f"fft size must be a power of two, got {self.fft}")
        if not 1 <= self.win <= self.fft:
            raise ValueError(f"window length must lie in [1, fft], got {self.win}")
        if self.hop < 1 or self.n_mels < 1:
            raise ValueError("hop and n_mels must be positive")

    def to_json(self) -> dict:
        return {"fft": self.fft, "hop": self.hop, "win": self.win, "n_mels": self.n_mels,
                "fmin": self.fmin, "fmax": self.fmax}


def frame_count(n_samples: int, win: int, hop: int) -> int:
    padded = n_samples + 2 * (win // 2)
    return 1 + (padded - win) // hop


def stft(w: Waveform, fft: int = 1024, hop: int = 256, win: int = 1024) -> np.ndarray:
    """Hann-windowed, reflection-padded STFT; returns ``frames x (fft // 2 + 1)`` complex."""
    x = w.samples
    pad = win // 2
    if x.size <= pad:
        raise SignalTooShortError(f"signal of {x.size} samples is shorter than one frame (needs > {pad})")
    padded = np.pad(x, pad, mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(padded, win)[::hop]
    window = get_window("hann", win, fftbins=True)
    if win < fft:
        # centre the window inside the FFT frame
        left = (fft - win) // 2
        window = np.pad(window, (left, fft - win - left))
        frames = np.pad(frames, ((0, 0), (left, fft - win - left)))
    return np.fft.rfft(frames * window, n=fft, axis=1)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sr: float, fft: int = 1024, n_mels: int = 80, fmin: float = 0.0,
                   fmax: float | None = None) -> np.ndarray:
    """Triangular HTK-mel filters, ``n_mels x (fft // 2 + 1)``, unnormalized (peak 1)."""
    fmax = sr / 2 if fmax is None else fmax
    if not 0 <= fmin < fmax <= sr / 2:
        raise ValueError(f"need 0 <= fmin < fmax <= sr/2, got fmin={fmin}, fmax={fmax}, sr={sr}")
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    freqs = np.arange(fft // 2 + 1) * sr / fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


@dataclass(frozen=True)
class MelSpectrogram:
    values: np.ndarray  # frames x n_mels energies
    sample_rate: int
    config: SpectrogramConfig

    @property
    def frames(self) -> int:
        return self.values.shape[0]


def mel_spectrogram(w: Waveform, cfg: SpectrogramConfig = SpectrogramConfig()) -> MelSpectrogram:
    power = np.abs(stft(w, cfg.fft, cfg.hop, cfg.win)) ** 2
    fb = mel_filterbank(w.sample_rate, cfg.fft, cfg.n_mels, cfg.fmin, cfg.fmax)
    return MelSpectrogram(np.maximum(power @ fb.T, FLOOR), w.sample_rate, cfg)


def mel_cepstrum(m: MelSpectrogram | np.ndarray, K: int = 13) -> np.ndarray:
    """Orthonormal DCT-II of log mel energies, keeping coefficients 1..K."""
    values = m.values if isinstance(m, MelSpectrogram) else np.asarray(m, dtype=np.float64)
    n_mels = values.shape[1]
    if not 1 <= K < n_mels:
        raise ValueError(f"K must satisfy 1 <= K < n_mels={n_mels}, got {K}")
    logmel = np.log(np.maximum(values, FLOOR))
    return scipy.fft.dct(logmel, type=2, norm="ortho", axis=1)[:, 1:K + 1]
