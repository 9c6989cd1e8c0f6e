"""Window/mask construction and batch sampling.

A training sample pairs five random reference frames with a five-frame
contiguous target window whose lower half is zeroed; the generator input
concatenates them channelwise (channels 0..2 reference, 3..5 masked target).
Mismatched samples take their mel chunk from a foreign clip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..config import FRAMES_PER_WINDOW, MASK_ROW, MEL_STEPS_PER_FRAME, MEL_STEPS_PER_WINDOW
from ..errors import ConfigurationError, DataError
from .corpus import Clip
from .mel import mel_chunk, mel_chunk_start


def window_frames_float(clip: Clip, t_index: int) -> np.ndarray:
    """[T, 3, H, W] float32 frames in [0, 1] for the window starting at t_index."""
    if t_index < 0 or t_index + FRAMES_PER_WINDOW > clip.n_frames:
        raise DataError(f"clip {clip.clip_id}: window at {t_index} does not fit "
                        f"{clip.n_frames} frames")
    window = clip.frames[t_index:t_index + FRAMES_PER_WINDOW]
    return np.ascontiguousarray(window.transpose(0, 3, 1, 2)).astype(np.float32) / 255.0


def frames_float(clip: Clip, indices) -> np.ndarray:
    sel = clip.frames[np.asarray(indices)]
    return np.ascontiguousarray(sel.transpose(0, 3, 1, 2)).astype(np.float32) / 255.0


def mask_lower_half(target: np.ndarray) -> np.ndarray:
    masked = target.copy()
    masked[..., MASK_ROW:, :] = 0.0
    return masked


def make_masked_input(reference: np.ndarray, target: np.ndarray) -> np.ndarray:
    """[T, 6, H, W]: reference frames stacked with the lower-half-masked target."""
    if reference.shape != target.shape:
        raise DataError(f"reference/target shape mismatch: {reference.shape} vs {target.shape}")
    return np.concatenate([reference, mask_lower_half(target)], axis=1)


def max_window_start(clip: Clip) -> int:
    """Largest window start with both frame and mel coverage."""
    t_video = clip.n_frames - FRAMES_PER_WINDOW
    mel_steps = clip.mel.shape[1]
    t_audio = math.floor((mel_steps - MEL_STEPS_PER_WINDOW) / MEL_STEPS_PER_FRAME)
    return min(t_video, t_audio)


@dataclass
class TrainingSample:
    reference: np.ndarray      # [T, 3, H, W]
    target: np.ndarray         # [T, 3, H, W]
    masked_input: np.ndarray   # [T, 6, H, W]
    mel: np.ndarray            # [80, 16]
    matched: bool
    clip_id: str
    audio_clip_id: str
    t_index: int
    mel_start: int


def make_sample(clip: Clip, t_index: int, matched: bool = True, *,
                audio_clip: Clip | None = None,
                rng: np.random.Generator | None = None) -> TrainingSample:
    rng = rng if rng is not None else np.random.default_rng()
    target = window_frames_float(clip, t_index)
    ref_indices = rng.choice(clip.n_frames, size=FRAMES_PER_WINDOW, replace=False) \
        if clip.n_frames >= FRAMES_PER_WINDOW else np.zeros(FRAMES_PER_WINDOW, dtype=int)
    reference = frames_float(clip, np.sort(ref_indices))
    masked_input = make_masked_input(reference, target)

    if matched:
        source = clip
        mel_t = t_index
        if t_index > max_window_start(clip):
            raise DataError(f"clip {clip.clip_id}: audio does not cover window at {t_index}")
    else:
        if audio_clip is None:
            raise ConfigurationError("mismatched samples need an audio_clip to draw from")
        source = audio_clip
        mel_t = int(rng.integers(0, max_window_start(source) + 1))
    chunk = mel_chunk(source.mel, mel_t).astype(np.float32)
    return TrainingSample(reference=reference, target=target, masked_input=masked_input,
                          mel=chunk, matched=matched, clip_id=clip.clip_id,
                          audio_clip_id=source.clip_id, t_index=t_index,
                          mel_start=mel_chunk_start(mel_t))


def collate_training_batch(samples: list[TrainingSample]) -> dict[str, torch.Tensor]:
    return {
        "masked_input": torch.from_numpy(np.stack([s.masked_input for s in samples])),
        "target": torch.from_numpy(np.stack([s.target for s in samples])),
        "mel": torch.from_numpy(np.stack([s.mel for s in samples])).unsqueeze(1),
        "matched": torch.tensor([s.matched for s in samples]),
    }


def sample_training_batch(clips: list[Clip], batch_size: int,
                          rng: np.random.Generator) -> dict[str, torch.Tensor]:
    """Matched samples only; the generator always trains against aligned audio."""
    samples = []
    for _ in range(batch_size):
        clip = clips[int(rng.integers(0, len(clips)))]
        t = int(rng.integers(0, max_window_start(clip) + 1))
        samples.append(make_sample(clip, t, matched=True, rng=rng))
    return collate_training_batch(samples)


def sample_expert_arrays(clips: list[Clip], n: int, rng: np.random.Generator,
                         matched: bool | None = None
                         ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(windows [n, T, 3, H, W], mel [n, 1, 80, 16], labels [n]) of real windows.

    matched=None draws the label per item; a bool forces it for the whole set.
    Mismatched items pair the window with audio from a different clip.
    """
    if len(clips) < 2:
        raise DataError("expert sampling needs at least 2 clips for mismatched pairs")
    windows, mels, labels = [], [], []
    for _ in range(n):
        label = bool(rng.random() < 0.5) if matched is None else matched
        idx = int(rng.integers(0, len(clips)))
        clip = clips[idx]
        t = int(rng.integers(0, max_window_start(clip) + 1))
        if label:
            sample = make_sample(clip, t, matched=True, rng=rng)
        else:
            foreign = clips[int((idx + 1 + rng.integers(0, len(clips) - 1)) % len(clips))]
            sample = make_sample(clip, t, matched=False, audio_clip=foreign, rng=rng)
        windows.append(sample.target)
        mels.append(sample.mel)
        labels.append(label)
    return (torch.from_numpy(np.stack(windows)),
            torch.from_numpy(np.stack(mels)).unsqueeze(1),
            torch.tensor(labels))
