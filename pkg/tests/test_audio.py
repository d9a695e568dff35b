from __future__ import annotations

import numpy as np
import pytest

from hydrowatch.audio import (AudioSegment, read_raw_float, read_wav,
                              write_raw_float, write_wav)
from hydrowatch.errors import ConfigurationError, InputError


class TestAudioSegment:
    def test_invalid_rate_rejected(self):
        with pytest.raises(ConfigurationError):
            AudioSegment(np.zeros(10), sample_rate=0, duration=1.0)

    def test_invalid_duration_rejected(self):
        with pytest.raises(ConfigurationError):
            AudioSegment(np.zeros(10), sample_rate=100, duration=-1.0)

    def test_from_samples_sets_duration(self):
        seg = AudioSegment.from_samples(np.zeros(48_000), 96_000)
        assert seg.duration == pytest.approx(0.5)


@pytest.mark.parametrize("bit_depth", [16, 24, 32])
def test_wav_round_trip(tmp_path, rng, bit_depth):
    samples = np.clip(rng.normal(scale=0.3, size=4000), -1.0, 1.0)
    path = tmp_path / "x.wav"
    write_wav(path, samples, 8000, bit_depth=bit_depth)
    rate, back = read_wav(path)
    assert rate == 8000
    scale = {16: 1 << 15, 24: 1 << 23, 32: None}[bit_depth]
    if scale is None:
        assert np.allclose(back, samples, atol=1e-7)  # float32 storage
    else:
        assert np.allclose(back, samples, atol=1.0 / scale)


def test_wav_24bit_round_trip_exact_on_grid(tmp_path, rng):
    quantized = np.round(rng.normal(scale=0.3, size=4000) * (1 << 23)) / (1 << 23)
    quantized = np.clip(quantized, -1.0, 1.0 - 1.0 / (1 << 23))
    path = tmp_path / "q.wav"
    write_wav(path, quantized, 96_000, bit_depth=24)
    rate, back = read_wav(path)
    assert rate == 96_000
    assert np.array_equal(back, quantized)


def test_unsupported_bit_depth(tmp_path):
    with pytest.raises(ConfigurationError):
        write_wav(tmp_path / "x.wav", np.zeros(10), 8000, bit_depth=12)


def test_raw_float_round_trip(tmp_path, rng):
    samples = rng.normal(size=1000).astype(np.float32).astype(np.float64)
    path = tmp_path / "x.f32"
    write_raw_float(path, samples, 16_000)
    rate, back = read_raw_float(path)
    assert rate == 16_000
    assert np.array_equal(back, samples)


def test_raw_float_missing_sidecar(tmp_path):
    path = tmp_path / "x.f32"
    np.zeros(10, dtype=np.float32).tofile(str(path))
    with pytest.raises(InputError):
        read_raw_float(path)
