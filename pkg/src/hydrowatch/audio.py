"""Audio segment container and file I/O (PCM WAV and raw float with sidecar)."""
from __future__ import annotations

import json
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError


@dataclass
class AudioSegment:
    """A fixed-duration block of samples from one hydrophone channel.

    Samples are float64 in [-1, 1] nominal range. Emitted segments always
    satisfy len(samples) == round(sample_rate * duration).
    """

    samples: np.ndarray
    sample_rate: int = 96_000
    duration: float = 6.0
    channel_id: str = "H1"

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.duration <= 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration}")
        self.samples = np.asarray(self.samples, dtype=np.float64)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @classmethod
    def from_samples(cls, samples, sample_rate: int, channel_id: str = "H1") -> "AudioSegment":
        samples = np.asarray(samples, dtype=np.float64)
        return cls(samples=samples, sample_rate=sample_rate,
                   duration=len(samples) / sample_rate, channel_id=channel_id)


def _read_wav_24bit(path: Path):
    # stdlib wave reads 24-bit frames as raw bytes; unpack to int32 manually.
    with wave.open(str(path), "rb") as wf:
        rate = wf.getframerate()
        n_channels = wf.getnchannels()
        raw = wf.readframes(wf.getnframes())
    n = len(raw) // 3
    a = np.frombuffer(raw, dtype=np.uint8).reshape(n, 3)
    vals = (a[:, 0].astype(np.int32)
            | (a[:, 1].astype(np.int32) << 8)
            | (a[:, 2].astype(np.int32) << 16))
    vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
    data = vals.astype(np.float64) / float(1 << 23)
    if n_channels > 1:
        data = data.reshape(-1, n_channels)
    return rate, data


def read_wav(path) -> tuple[int, np.ndarray]:
    """Read a PCM WAV file (16/24-bit int or 32-bit float).

    Returns (sample_rate, samples) with samples normalized to [-1, 1]
    float64, shape [n] for mono or [n, channels] otherwise.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            sampwidth = wf.getsampwidth()
        if sampwidth == 3:
            return _read_wav_24bit(path)
    except wave.Error:
        pass  # non-PCM formats (float32) fall through to scipy
    from scipy.io import wavfile

    rate, data = wavfile.read(str(path))
    if data.dtype == np.int16:
        data = data.astype(np.float64) / float(1 << 15)
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / float(1 << 31)
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    else:
        raise InputError(f"unsupported WAV sample format: {data.dtype}")
    return rate, data


def write_wav(path, samples: np.ndarray, sample_rate: int, bit_depth: int = 24) -> None:
    """Write mono or multi-channel audio as PCM WAV (16/24-bit) or float32."""
    samples = np.asarray(samples, dtype=np.float64)
    path = Path(path)
    if bit_depth == 32:
        from scipy.io import wavfile

        wavfile.write(str(path), sample_rate, samples.astype(np.float32))
        return
    if bit_depth == 16:
        ints = np.clip(np.round(samples * (1 << 15)), -(1 << 15), (1 << 15) - 1).astype(np.int16)
        from scipy.io import wavfile

        wavfile.write(str(path), sample_rate, ints)
        return
    if bit_depth != 24:
        raise ConfigurationError(f"unsupported bit depth: {bit_depth}")
    ints = np.clip(np.round(samples * (1 << 23)), -(1 << 23), (1 << 23) - 1).astype(np.int32)
    flat = ints.reshape(-1)
    raw = bytearray(len(flat) * 3)
    b = flat.astype("<i4").view(np.uint8).reshape(-1, 4)
    packed = b[:, :3].tobytes()
    n_channels = 1 if samples.ndim == 1 else samples.shape[1]
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(n_channels)
        wf.setsampwidth(3)
        wf.setframerate(sample_rate)
        wf.writeframes(packed)


def read_raw_float(path) -> tuple[int, np.ndarray]:
    """Read headerless float32 audio with a JSON sidecar (<path>.json).

    The sidecar must provide sample_rate and channels.
    """
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    if not sidecar.exists():
        raise InputError(f"missing sidecar metadata: {sidecar}")
    meta = json.loads(sidecar.read_text())
    rate = int(meta["sample_rate"])
    channels = int(meta.get("channels", 1))
    data = np.fromfile(str(path), dtype=np.float32).astype(np.float64)
    if channels > 1:
        data = data.reshape(-1, channels)
    return rate, data


def write_raw_float(path, samples: np.ndarray, sample_rate: int) -> None:
    path = Path(path)
    samples = np.asarray(samples, dtype=np.float32)
    channels = 1 if samples.ndim == 1 else samples.shape[1]
    samples.tofile(str(path))
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps({"sample_rate": sample_rate, "channels": channels}))
