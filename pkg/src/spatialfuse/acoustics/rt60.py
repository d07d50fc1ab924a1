"""Reverberation time from Schroeder backward integration.

RT60 is extrapolated from a least-squares line through the energy decay
curve between ``fit_lo`` and ``fit_hi`` dB (default -5 to -25 dB, a T20
fit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateFitError, InsufficientDecayError, SilentSignalError
from ..numerics.rng import Rng
from .wav import Waveform

EDC_FLOOR_DB = -300.0
ENVELOPE_FRAME_S = 0.01


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray   # seconds
    values: np.ndarray  # dB, starts at 0, non-increasing
    # drop of the 10 ms energy envelope from its peak to its quietest later frame;
    # separates real decay from the integration-limit fall-off at the end of the EDC
    envelope_range_db: float | None = None


def _envelope_range_db(x: np.ndarray, sr: int) -> float:
    n = max(1, int(round(ENVELOPE_FRAME_S * sr)))
    usable = (x.size // n) * n or x.size
    frames = (x[:usable] ** 2).reshape(-1, min(n, usable)).sum(axis=1)
    peak = int(np.argmax(frames))
    tail_min = frames[peak:].min()
    if tail_min <= 0:
        return math.inf
    return float(10.0 * np.log10(frames[peak] / tail_min))


def schroeder_edc(w: Waveform) -> DecayCurve:
    """``EDC(t) = 10 log10(sum_{tau >= t} x^2 / sum x^2)``, floored at -300 dB."""
    peak = np.max(np.abs(w.samples))
    if peak == 0:
        raise SilentSignalError("cannot integrate the decay of an all-zero signal")
    # scale to unit peak first so tiny amplitudes do not underflow when squared
    energy = np.cumsum((w.samples[::-1] / peak) ** 2)[::-1]
    total = energy[0]
    ratio = np.maximum(energy / total, 10.0 ** (EDC_FLOOR_DB / 10.0))
    values = 10.0 * np.log10(ratio)
    values[0] = 0.0
    times = np.arange(w.samples.size) / w.sample_rate
    return DecayCurve(times, values, _envelope_range_db(w.samples, w.sample_rate))


def rt60_estimate(edc: DecayCurve, fit_lo: float = -5.0, fit_hi: float = -25.0) -> float:
    if not fit_hi < fit_lo <= 0:
        raise ValueError(f"fit range must satisfy fit_hi < fit_lo <= 0, got ({fit_lo}, {fit_hi})")
    need = -fit_hi
    if edc.values.min() > fit_hi:
        raise InsufficientDecayError(
            f"energy decay curve bottoms out at {edc.values.min():.1f} dB, never reaching {fit_hi} dB")
    if edc.envelope_range_db is not None and edc.envelope_range_db < need:
        raise InsufficientDecayError(
            f"signal envelope falls only {edc.envelope_range_db:.1f} dB; a {need:.0f} dB decay is required")
    mask = (edc.values <= fit_lo) & (edc.values >= fit_hi)
    if np.count_nonzero(mask) < 2:
        raise DegenerateFitError(f"fewer than two EDC samples between {fit_hi} and {fit_lo} dB")
    slope, _ = np.polyfit(edc.times[mask], edc.values[mask], 1)
    if slope >= 0:
        raise DegenerateFitError(f"non-negative decay slope {slope:.3g} dB/s")
    return -60.0 / slope


def rt60(w: Waveform, fit_lo: float = -5.0, fit_hi: float = -25.0) -> float:
    return rt60_estimate(schroeder_edc(w), fit_lo, fit_hi)


def rte(pred: Waveform, target: Waveform, fit_lo: float = -5.0, fit_hi: float = -25.0) -> float:
    """Absolute RT60 difference in seconds."""
    values = []
    for label, w in (("pred", pred), ("target", target)):
        try:
            values.append(rt60(w, fit_lo, fit_hi))
        except (InsufficientDecayError, DegenerateFitError, SilentSignalError) as exc:
            raise type(exc)(f"{label}: {exc}") from None
    return abs(values[0] - values[1])


def synth_decay(rng: Rng, t60: float, sr: int = 16000, duration: float | None = None,
                amplitude: float = 0.9) -> Waveform:
    """Uniform noise under an exponential envelope losing 60 dB every ``t60`` seconds."""
    if t60 <= 0:
        raise ValueError(f"t60 must be positive, got {t60}")
    duration = 2.0 * t60 if duration is None else duration
    n = int(round(duration * sr))
    t = np.arange(n) / sr
    envelope = np.exp(-3.0 * math.log(10.0) * t / t60)
    return Waveform(sr, amplitude * envelope * rng.uniform_array(n, -1.0, 1.0))
