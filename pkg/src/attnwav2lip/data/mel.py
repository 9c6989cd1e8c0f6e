"""Log-mel front end.

Frames are centered on multiples of the hop (the signal is zero-padded by
half a window on each side), so a 5-frame video window at 25 fps lines up
with exactly 16 mel steps and chunk centers stay within one hop of the
window center.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..config import MEL_BANDS, MEL_HOP, MEL_STEPS_PER_FRAME, MEL_STEPS_PER_WINDOW, MEL_WIN, SAMPLE_RATE
from ..errors import DataError


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int = SAMPLE_RATE
    hop: int = MEL_HOP
    win: int = MEL_WIN
    n_bands: int = MEL_BANDS
    fmin: float = 0.0
    fmax: float = 8000.0
    floor: float = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=4)
def _filterbank_cached(cfg: MelConfig) -> np.ndarray:
    n_bins = cfg.win // 2 + 1
    freqs = np.arange(n_bins) * (cfg.sample_rate / cfg.win)
    mel_points = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_bands + 2)
    hz_points = mel_to_hz(mel_points)
    fb = np.zeros((cfg.n_bands, n_bins), dtype=np.float64)
    for i in range(cfg.n_bands):
        lo, center, hi = hz_points[i], hz_points[i + 1], hz_points[i + 2]
        rising = (freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - freqs) / max(hi - center, 1e-12)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def mel_filterbank(cfg: MelConfig = MelConfig()) -> np.ndarray:
    """[n_bands, win//2 + 1] triangular filters, unit peak, on the mel scale."""
    return _filterbank_cached(cfg).copy()


def expected_tone_band(freq_hz: float, cfg: MelConfig = MelConfig()) -> int:
    """Band whose triangle peaks nearest a pure tone, from mel arithmetic alone."""
    mel_lo, mel_hi = float(hz_to_mel(cfg.fmin)), float(hz_to_mel(cfg.fmax))
    step = (mel_hi - mel_lo) / (cfg.n_bands + 1)
    band = round((float(hz_to_mel(freq_hz)) - mel_lo) / step) - 1
    return int(np.clip(band, 0, cfg.n_bands - 1))


def n_mel_frames(n_samples: int, cfg: MelConfig = MelConfig()) -> int:
    return int(np.ceil(n_samples / cfg.hop))


def mel_spectrogram(waveform: np.ndarray, sample_rate: int,
                    cfg: MelConfig = MelConfig()) -> np.ndarray:
    """[n_bands, n_frames] natural-log mel energies of a mono waveform."""
    if sample_rate != cfg.sample_rate:
        raise DataError(
            f"expected {cfg.sample_rate} Hz audio, got {sample_rate} Hz "
            "(resample before ingestion; no silent resampling)")
    wav = np.asarray(waveform, dtype=np.float64)
    if wav.ndim != 1:
        raise DataError(f"expected mono waveform, got shape {wav.shape}")
    if wav.size == 0:
        raise DataError("empty waveform")
    n_frames = n_mel_frames(wav.size, cfg)
    half = cfg.win // 2
    padded = np.pad(wav, (half, half + cfg.hop * n_frames - wav.size))
    window = np.hanning(cfg.win)
    starts = np.arange(n_frames) * cfg.hop
    frames = np.stack([padded[s:s + cfg.win] for s in starts]) * window
    power = np.abs(np.fft.rfft(frames, n=cfg.win, axis=1)) ** 2
    mel = _filterbank_cached(cfg) @ power.T
    return np.log(np.maximum(mel, cfg.floor)).astype(np.float32)


def mel_chunk_start(frame_index: int) -> int:
    """Mel step index aligned to a video frame index (25 fps against 80 steps/s)."""
    return int(round(frame_index * MEL_STEPS_PER_FRAME))


def mel_chunk(mel: np.ndarray, frame_index: int,
              steps: int = MEL_STEPS_PER_WINDOW) -> np.ndarray:
    """The [n_bands, steps] slice conditioning the window starting at frame_index."""
    start = mel_chunk_start(frame_index)
    if start < 0 or start + steps > mel.shape[1]:
        raise DataError(
            f"mel chunk [{start}:{start + steps}] out of range for {mel.shape[1]} steps")
    return mel[:, start:start + steps]
