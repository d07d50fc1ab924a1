from .mcd import dtw_align, mcd
from .rt60 import DecayCurve, rt60, rt60_estimate, rte, schroeder_edc, synth_decay
from .spectral import (MelSpectrogram, SpectrogramConfig, hz_to_mel, mel_cepstrum, mel_filterbank,
                       mel_spectrogram, mel_to_hz, stft)
from .wav import Waveform, decode_wav, encode_wav, read_wav, write_wav

__all__ = [
    "DecayCurve", "MelSpectrogram", "SpectrogramConfig", "Waveform", "decode_wav", "dtw_align", "encode_wav",
    "hz_to_mel", "mcd", "mel_cepstrum", "mel_filterbank", "mel_spectrogram", "mel_to_hz", "read_wav", "rt60",
    "rt60_estimate", "rte", "schroeder_edc", "stft", "synth_decay", "write_wav",
]
