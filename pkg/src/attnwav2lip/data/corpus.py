"""On-disk clip layout and ingestion.

A corpus is a directory with a corpus.json manifest and one subdirectory per
clip holding zero-padded numbered PNG frames (25 fps, 96x96 RGB) plus a
16 kHz 16-bit mono audio.wav. Ingestion accepts precomputed face crops only.
"""

from __future__ import annotations

import json
import os
import wave
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ..config import FPS, IMG_SIZE, SAMPLE_RATE
from ..errors import DataError
from .mel import mel_spectrogram

MANIFEST_NAME = "corpus.json"
DURATION_SLACK_S = 0.2


@dataclass
class Clip:
    """Frames and waveform of one talking-face clip, with lazy mel."""

    clip_id: str
    frames: np.ndarray          # uint8 [n, 96, 96, 3]
    waveform: np.ndarray        # float32 in [-1, 1]
    fps: int = FPS
    sample_rate: int = SAMPLE_RATE
    _mel: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        self.waveform = np.asarray(self.waveform, dtype=np.float32)
        if self.frames.ndim != 4 or self.frames.shape[1:] != (IMG_SIZE, IMG_SIZE, 3):
            raise DataError(f"clip {self.clip_id}: expected [n, {IMG_SIZE}, {IMG_SIZE}, 3] "
                            f"frames, got {self.frames.shape}")
        if self.frames.shape[0] < 5:
            raise DataError(f"clip {self.clip_id}: needs at least 5 frames")
        if self.waveform.ndim != 1:
            raise DataError(f"clip {self.clip_id}: waveform must be mono")
        video_s = self.frames.shape[0] / self.fps
        audio_s = self.waveform.size / self.sample_rate
        if abs(video_s - audio_s) > DURATION_SLACK_S:
            raise DataError(
                f"clip {self.clip_id}: video ({video_s:.2f}s) and audio ({audio_s:.2f}s) "
                f"durations disagree by more than {DURATION_SLACK_S}s")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def mel(self) -> np.ndarray:
        if self._mel is None:
            self._mel = mel_spectrogram(self.waveform, self.sample_rate)
        return self._mel


def write_wav(path, waveform: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    samples = np.clip(np.asarray(waveform, dtype=np.float64), -1.0, 1.0)
    pcm = (samples * 32767.0).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def read_wav(path) -> tuple[np.ndarray, int]:
    with wave.open(os.fspath(path), "rb") as wf:
        if wf.getnchannels() != 1 or wf.getsampwidth() != 2:
            raise DataError(f"{path}: expected 16-bit mono PCM")
        rate = wf.getframerate()
        pcm = np.frombuffer(wf.readframes(wf.getnframes()), dtype="<i2")
    return (pcm.astype(np.float32) / 32767.0), rate


def save_clip(clip_dir, clip: Clip) -> None:
    os.makedirs(clip_dir, exist_ok=True)
    for i, frame in enumerate(clip.frames):
        Image.fromarray(frame, mode="RGB").save(
            os.path.join(clip_dir, f"frame_{i:05d}.png"), format="PNG")
    write_wav(os.path.join(clip_dir, "audio.wav"), clip.waveform, clip.sample_rate)


def load_frames_dir(frames_dir) -> np.ndarray:
    names = sorted(n for n in os.listdir(frames_dir) if n.endswith(".png"))
    if not names:
        raise DataError(f"no PNG frames found in {frames_dir}")
    frames = [np.asarray(Image.open(os.path.join(frames_dir, n)).convert("RGB"))
              for n in names]
    return np.stack(frames)


def load_clip(clip_dir, clip_id: str | None = None) -> Clip:
    if not os.path.isdir(clip_dir):
        raise DataError(f"clip directory not found: {clip_dir}")
    frames = load_frames_dir(clip_dir)
    wav_path = os.path.join(clip_dir, "audio.wav")
    if not os.path.exists(wav_path):
        raise DataError(f"missing audio.wav in {clip_dir}")
    waveform, rate = read_wav(wav_path)
    if rate != SAMPLE_RATE:
        raise DataError(f"{wav_path}: expected {SAMPLE_RATE} Hz, got {rate} Hz")
    return Clip(clip_id or os.path.basename(os.path.normpath(clip_dir)), frames, waveform)


class Corpus:
    """Lazy clip loader over the documented directory layout."""

    def __init__(self, root, manifest: dict):
        self.root = os.fspath(root)
        self.manifest = manifest
        self.clip_ids: list[str] = list(manifest["clips"])
        self._cache: dict[str, Clip] = {}

    def __len__(self) -> int:
        return len(self.clip_ids)

    def clip(self, index: int) -> Clip:
        clip_id = self.clip_ids[index]
        if clip_id not in self._cache:
            self._cache[clip_id] = load_clip(os.path.join(self.root, clip_id), clip_id)
        return self._cache[clip_id]

    def clips(self) -> list[Clip]:
        return [self.clip(i) for i in range(len(self))]


def write_manifest(root, clip_ids: list[str], seed: int | None = None,
                   extra: dict | None = None) -> dict:
    manifest = {
        "clips": list(clip_ids),
        "fps": FPS,
        "sample_rate": SAMPLE_RATE,
        "img_size": IMG_SIZE,
        "seed": seed,
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(root, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    return manifest


def load_corpus(root) -> Corpus:
    path = os.path.join(os.fspath(root), MANIFEST_NAME)
    if not os.path.exists(path):
        raise DataError(f"no {MANIFEST_NAME} manifest under {root}")
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if not manifest.get("clips"):
        raise DataError(f"corpus at {root} lists no clips")
    return Corpus(root, manifest)
