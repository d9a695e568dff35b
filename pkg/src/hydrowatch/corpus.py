"""Synthetic labeled corpora for training and evaluation experiments.

Each sample gets its own synthesis seed plus nuisance variation (noise
floor, gain, onset shift) so that learned models must generalize instead
of memorizing a single waveform per class.
"""
from __future__ import annotations

import numpy as np

from .audio import AudioSegment
from .dsp import stft, to_mel
from .evaluation import LabeledSample
from .simulate import CLASS_REGISTRY, EventSpec, synthesize_event


def nuisance_segment(spec: EventSpec, sample_rate: int, rng) -> AudioSegment:
    """Synthesized event with per-sample gain, onset shift, and noise floor."""
    base = synthesize_event(spec, sample_rate).samples
    n = len(base)
    shift = int(rng.integers(0, max(1, n // 8)))
    sig = np.zeros(n)
    sig[shift:] = base[: n - shift]
    sig *= 10.0 ** (rng.uniform(-6.0, 0.0) / 20.0)
    noise_db = rng.uniform(-55.0, -40.0)
    sig += rng.normal(0.0, 10.0 ** (noise_db / 20.0), n)
    return AudioSegment(sig, sample_rate, spec.duration)


def build_corpus(classes=None, per_class: int = 12, sample_rate: int = 16_000,
                 duration: float = 1.0, bands: int = 32,
                 seed: int = 0) -> list[LabeledSample]:
    """Labeled Mel-spectrogram corpus, per_class samples for each class."""
    classes = list(classes) if classes is not None else list(CLASS_REGISTRY)
    rng = np.random.default_rng(seed)
    samples = []
    for ci, cls in enumerate(classes):
        for k in range(per_class):
            spec = EventSpec(cls, duration, seed=seed * 100_003 + ci * 1009 + k)
            seg = nuisance_segment(spec, sample_rate, rng)
            mel = to_mel(stft(seg), bands=bands)
            samples.append(LabeledSample(mel, cls, f"{cls}-{k:04d}"))
    return samples
