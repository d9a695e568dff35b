"""Spectral preprocessing: stream segmentation, STFT, and normalized Mel features.

The feature chain is: magnitude STFT (Hann window, end-padded so a 6 s
segment at 50 ms hop yields 121 frames) -> power in dB relative to the
segment maximum -> clip to [-80, -10] dB -> triangular Mel bands ->
linear map of [-80, -10] onto [-1, +1].
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .audio import AudioSegment
from .errors import ConfigurationError, InputError

DB_FLOOR = -80.0
DB_CEIL = -10.0


@dataclass
class Spectrogram:
    """Magnitude spectrogram, [frequency_bins x frames]."""

    magnitudes: np.ndarray
    bin_width: float   # Hz, equals 1 / window
    hop: float         # seconds
    window: float      # seconds

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def max_frequency(self) -> float:
        return self.bin_width * (self.n_bins - 1)


@dataclass
class MelSpectrogram:
    """Normalized Mel matrix, [bands x frames], every value in [-1, 1]."""

    values: np.ndarray

    @property
    def n_bands(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


class StreamSegmenter:
    """Accumulates an unbounded sample stream into fixed-duration segments.

    Single-consumer: holds the trailing partial buffer internally and never
    emits it.
    """

    def __init__(self, sample_rate: int, duration: float, channel_id: str = "H1"):
        if sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be positive, got {sample_rate}")
        if duration <= 0:
            raise ConfigurationError(f"duration must be positive, got {duration}")
        self.sample_rate = sample_rate
        self.duration = duration
        self.channel_id = channel_id
        self.segment_len = int(round(sample_rate * duration))
        self._pending: list[np.ndarray] = []
        self._pending_len = 0
        self._emitted = 0

    def push(self, chunk) -> list[AudioSegment]:
        chunk = np.atleast_1d(np.asarray(chunk, dtype=np.float64))
        self._pending.append(chunk)
        self._pending_len += len(chunk)
        out = []
        while self._pending_len >= self.segment_len:
            buf = np.concatenate(self._pending)
            seg, rest = buf[: self.segment_len], buf[self.segment_len:]
            self._pending = [rest]
            self._pending_len = len(rest)
            out.append(AudioSegment(seg, self.sample_rate, self.duration, self.channel_id))
            self._emitted += 1
        return out

    @property
    def pending_samples(self) -> int:
        return self._pending_len

    @property
    def emitted(self) -> int:
        return self._emitted


def segment_stream(stream: Iterable, sample_rate: int, duration: float,
                   channel_id: str = "H1") -> Iterator[AudioSegment]:
    """Yield one AudioSegment per full buffer, in arrival order.

    `stream` is an iterable of sample chunks (scalars or arrays). A trailing
    partial buffer is retained and never emitted.
    """
    seg = StreamSegmenter(sample_rate, duration, channel_id)
    for chunk in stream:
        yield from seg.push(chunk)


def stft(segment: AudioSegment, window: float = 0.1,
         overlap_fraction: float = 0.5) -> Spectrogram:
    """Magnitude STFT with a Hann window and zero-padded final frame.

    Frame count is floor(duration / hop) + 1; the last windows read past the
    segment end and are zero-padded, matching the 121-frame layout for a
    6 s segment at 100 ms window / 50% overlap.
    """
    if not 0 <= overlap_fraction < 1:
        raise InputError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    if window > segment.duration + 1e-12:
        raise InputError(f"window {window}s longer than segment {segment.duration}s")
    n_window = int(round(window * segment.sample_rate))
    hop = window * (1.0 - overlap_fraction)
    n_hop = int(round(hop * segment.sample_rate))
    if n_hop < 1:
        raise InputError("hop must span at least one sample")
    n_frames = int(np.floor(segment.duration / hop)) + 1
    taper = np.hanning(n_window)
    x = segment.samples
    padded = np.concatenate([x, np.zeros(n_window + n_hop, dtype=np.float64)])
    frames = np.stack([padded[i * n_hop: i * n_hop + n_window] for i in range(n_frames)])
    mags = np.abs(np.fft.rfft(frames * taper, axis=1)).T
    return Spectrogram(magnitudes=mags, bin_width=1.0 / window, hop=hop, window=window)


def mel_frequencies(n_bands: int, f_max: float) -> np.ndarray:
    """Band edge frequencies (n_bands + 2 points) on the HTK Mel scale over [0, f_max]."""
    def to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def from_mel(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    mels = np.linspace(0.0, to_mel(f_max), n_bands + 2)
    return from_mel(mels)


def mel_filterbank(n_bands: int, n_bins: int, bin_width: float) -> np.ndarray:
    """Triangular overlapping filters, rows normalized to sum to 1.

    Rows that cover no FFT bin fall back to their single nearest bin so the
    band aggregation stays a weighted average (outputs remain inside the
    input value range).
    """
    f_max = bin_width * (n_bins - 1)
    edges = mel_frequencies(n_bands, f_max)
    freqs = np.arange(n_bins) * bin_width
    fb = np.zeros((n_bands, n_bins))
    for b in range(n_bands):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        up = (freqs - lo) / max(mid - lo, 1e-12)
        down = (hi - freqs) / max(hi - mid, 1e-12)
        fb[b] = np.clip(np.minimum(up, down), 0.0, None)
        s = fb[b].sum()
        if s > 0:
            fb[b] /= s
        else:
            fb[b, int(np.argmin(np.abs(freqs - mid)))] = 1.0
    return fb


def to_mel(spec: Spectrogram, bands: int = 128) -> MelSpectrogram:
    """Clipped, Mel-banded, [-1, 1]-normalized representation of a spectrogram.

    An all-zero spectrogram maps to the silence floor (all -1); no numeric
    exception is ever raised for finite input.
    """
    if spec.magnitudes.size == 0:
        raise InputError("empty spectrogram")
    power = spec.magnitudes.astype(np.float64) ** 2
    peak = power.max()
    if peak <= 0.0:
        # exact silence floor; skip the banding to avoid rounding off -1
        return MelSpectrogram(values=np.full((bands, spec.n_frames), -1.0))
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(power / peak)
    db = np.clip(db, DB_FLOOR, DB_CEIL)
    fb = mel_filterbank(bands, spec.n_bins, spec.bin_width)
    mel_db = np.clip(fb @ db, DB_FLOOR, DB_CEIL)
    return MelSpectrogram(values=normalize_db(mel_db))


def normalize_db(db: np.ndarray) -> np.ndarray:
    """Linear map of clipped dB values: -80 -> -1 and -10 -> +1."""
    db = np.clip(db, DB_FLOOR, DB_CEIL)
    return (db - DB_FLOOR) / (DB_CEIL - DB_FLOOR) * 2.0 - 1.0


def export_csv(matrix: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix):
            writer.writerow([f"{v:.8g}" for v in row])


def export_heatmap(matrix: np.ndarray, path, title: str = "",
                   xlabel: str = "frame", ylabel: str = "bin") -> None:
    """Render a spectrogram-style heatmap to an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    im = ax.imshow(np.asarray(matrix), aspect="auto", origin="lower", cmap="magma")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
