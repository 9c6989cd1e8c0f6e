"""Corpus ingestion, mel extraction, window/mask construction, and the
synthetic desk-scale corpus generator."""

from .corpus import Clip, Corpus, load_clip, load_corpus, save_clip
from .mel import MelConfig, mel_chunk, mel_chunk_start, mel_filterbank, mel_spectrogram
from .sampling import (TrainingSample, collate_training_batch, make_masked_input,
                       make_sample, sample_expert_arrays, sample_training_batch)
from .synth import synth_corpus

__all__ = [
    "Clip", "Corpus", "load_clip", "load_corpus", "save_clip",
    "MelConfig", "mel_chunk", "mel_chunk_start", "mel_filterbank", "mel_spectrogram",
    "TrainingSample", "collate_training_batch", "make_masked_input", "make_sample",
    "sample_expert_arrays", "sample_training_batch",
    "synth_corpus",
]
