"""Procedural desk-scale corpus: flat-colored faces whose mouth aperture
tracks the short-time amplitude envelope of generated audio.

Each clip draws a randomized face layout (colors, head/eye/mouth geometry)
that stays constant across frames; only the mouth opening moves. The audio
is an amplitude-modulated mix of a tone and band-limited noise, so the mel
energies and the aperture series share the same envelope. Everything is a
pure function of the seed, which makes regenerated corpora byte-identical.
"""

from __future__ import annotations

import os

import numpy as np

from ..config import FPS, IMG_SIZE, SAMPLE_RATE
from ..errors import ConfigurationError, InvariantViolation
from .corpus import Clip, Corpus, load_corpus, save_clip, write_manifest

APERTURE_CORR_MIN = 0.9


def _smooth_envelope(n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Slowly varying positive envelope in [0.05, 1] built from random sinusoids."""
    t = np.arange(n_samples) / SAMPLE_RATE
    env = np.zeros(n_samples)
    for _ in range(4):
        freq = rng.uniform(0.3, 2.4)
        amp = rng.uniform(0.4, 1.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        env += amp * np.sin(2.0 * np.pi * freq * t + phase)
    env -= env.min()
    peak = env.max()
    if peak > 0:
        env /= peak
    return 0.05 + 0.95 * env


def _bandlimited_noise(n_samples: int, rng: np.random.Generator,
                       lo_hz: float = 300.0, hi_hz: float = 3000.0) -> np.ndarray:
    spectrum = np.fft.rfft(rng.standard_normal(n_samples))
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / SAMPLE_RATE)
    spectrum[(freqs < lo_hz) | (freqs > hi_hz)] = 0.0
    noise = np.fft.irfft(spectrum, n=n_samples)
    rms = np.sqrt(np.mean(noise ** 2))
    return noise / max(rms, 1e-9)


def _clip_audio(n_samples: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(waveform, envelope): tone+noise carrier modulated by the envelope."""
    env = _smooth_envelope(n_samples, rng)
    t = np.arange(n_samples) / SAMPLE_RATE
    tone_hz = rng.uniform(120.0, 700.0)
    tone = np.sin(2.0 * np.pi * tone_hz * t + rng.uniform(0.0, 2.0 * np.pi))
    carrier = 0.6 * tone + 0.4 * _bandlimited_noise(n_samples, rng)
    wav = 0.75 * env * carrier
    return np.clip(wav, -1.0, 1.0).astype(np.float32), env


def frame_envelope(values: np.ndarray, n_frames: int) -> np.ndarray:
    """Per-frame mean of a sample-rate series (40 ms spans at 25 fps)."""
    spf = SAMPLE_RATE // FPS
    out = np.empty(n_frames)
    for f in range(n_frames):
        out[f] = values[f * spf:(f + 1) * spf].mean()
    return out


def frame_rms(waveform: np.ndarray, n_frames: int) -> np.ndarray:
    spf = SAMPLE_RATE // FPS
    out = np.empty(n_frames)
    for f in range(n_frames):
        seg = waveform[f * spf:(f + 1) * spf]
        out[f] = np.sqrt(np.mean(seg.astype(np.float64) ** 2))
    return out


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt((a ** 2).sum() * (b ** 2).sum())
    if denom == 0:
        return 0.0
    return float((a * b).sum() / denom)


class _FaceLayout:
    """Static per-clip geometry and palette; only the mouth aperture varies."""

    def __init__(self, rng: np.random.Generator):
        self.background = rng.integers(20, 110, size=3)
        self.skin = rng.integers(120, 230, size=3)
        self.lip = (self.skin * rng.uniform(0.15, 0.35)).astype(np.int64)
        self.eye = rng.integers(10, 70, size=3)
        self.face_cx = 48 + rng.integers(-3, 4)
        self.face_cy = 46 + rng.integers(-3, 4)
        self.face_rx = rng.integers(30, 39)
        self.face_ry = rng.integers(37, 45)
        self.eye_dx = rng.integers(11, 16)
        self.eye_y = 32 + rng.integers(-3, 4)
        self.eye_r = rng.integers(2, 5)
        self.mouth_cx = 48 + rng.integers(-5, 6)
        self.mouth_cy = 70 + rng.integers(-3, 4)
        self.mouth_w = rng.integers(9, 16)
        self.aperture_max = rng.uniform(8.0, 13.0)
        yy, xx = np.mgrid[0:IMG_SIZE, 0:IMG_SIZE]
        self._yy, self._xx = yy, xx
        self._face = (((xx - self.face_cx) / self.face_rx) ** 2
                      + ((yy - self.face_cy) / self.face_ry) ** 2) <= 1.0
        eyes = np.zeros_like(self._face)
        for sign in (-1, 1):
            ex = self.face_cx + sign * self.eye_dx
            eyes |= ((xx - ex) ** 2 + (yy - self.eye_y) ** 2) <= self.eye_r ** 2
        self._eyes = eyes

    def render(self, aperture: float) -> np.ndarray:
        img = np.empty((IMG_SIZE, IMG_SIZE, 3), dtype=np.uint8)
        img[:] = self.background
        img[self._face] = self.skin
        img[self._eyes] = self.eye
        ry = max(aperture, 0.75)
        mouth = (((self._xx - self.mouth_cx) / self.mouth_w) ** 2
                 + ((self._yy - self.mouth_cy) / ry) ** 2) <= 1.0
        img[mouth] = self.lip
        return img


def make_synthetic_clip(clip_id: str, rng: np.random.Generator,
                        duration_s: float = 2.0) -> Clip:
    n_frames = int(round(duration_s * FPS))
    n_samples = n_frames * (SAMPLE_RATE // FPS)
    waveform, env = _clip_audio(n_samples, rng)
    env_f = frame_envelope(env, n_frames)
    span = env_f.max() - env_f.min()
    env_norm = (env_f - env_f.min()) / span if span > 0 else np.zeros_like(env_f)
    layout = _FaceLayout(rng)
    apertures = 1.5 + env_norm * layout.aperture_max
    frames = np.stack([layout.render(a) for a in apertures])

    corr = pearson(apertures, frame_rms(waveform, n_frames))
    if corr < APERTURE_CORR_MIN:
        raise InvariantViolation(
            f"synthetic clip {clip_id}: aperture/envelope correlation {corr:.3f} "
            f"below {APERTURE_CORR_MIN}")
    return Clip(clip_id, frames, waveform)


def synth_corpus(out_dir, n_clips: int, seed: int, duration_s: float = 2.0) -> Corpus:
    """Write n_clips procedurally generated clips plus a manifest; returns the
    loaded corpus. Deterministic per (n_clips, seed, duration_s)."""
    if n_clips < 1:
        raise ConfigurationError(f"n_clips must be >= 1, got {n_clips}")
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    children = np.random.SeedSequence(seed).spawn(n_clips)
    clip_ids = []
    for i, child in enumerate(children):
        clip_id = f"clip_{i:05d}"
        clip = make_synthetic_clip(clip_id, np.random.default_rng(child), duration_s)
        save_clip(os.path.join(out_dir, clip_id), clip)
        clip_ids.append(clip_id)
    write_manifest(out_dir, clip_ids, seed=seed,
                   extra={"generator": "synthetic", "duration_s": duration_s})
    return load_corpus(out_dir)
