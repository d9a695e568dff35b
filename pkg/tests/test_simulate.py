from __future__ import annotations

import numpy as np
import pytest

from hydrowatch.audio import AudioSegment
from hydrowatch.errors import BufferOverrunError, ConfigurationError, InputError
from hydrowatch.simulate import (CLASS_REGISTRY, EventSpec, Scene,
                                 acquisition_loop, render_scene,
                                 synthesize_event)


class TestEventSpec:
    def test_unknown_class_rejected(self):
        with pytest.raises(InputError):
            EventSpec("submarine", 1.0)

    def test_zero_duration_rejected(self):
        with pytest.raises(InputError):
            EventSpec("knocking_wood", 0.0)

    def test_registry_has_ten_classes(self):
        assert len(CLASS_REGISTRY) == 10


class TestSynthesis:
    def test_bit_identical_under_seed(self):
        a = synthesize_event(EventSpec("plastic_scratching", 1.0, seed=5), 16_000)
        b = synthesize_event(EventSpec("plastic_scratching", 1.0, seed=5), 16_000)
        assert np.array_equal(a.samples, b.samples)

    def test_different_seeds_differ(self):
        a = synthesize_event(EventSpec("bubbles_large", 1.0, seed=1), 16_000)
        b = synthesize_event(EventSpec("bubbles_large", 1.0, seed=2), 16_000)
        assert not np.array_equal(a.samples, b.samples)

    def test_small_bubbles_band_limited(self):
        seg = synthesize_event(EventSpec("bubbles_small", 6.0, seed=0), 96_000)
        spectrum = np.abs(np.fft.rfft(seg.samples)) ** 2
        freqs = np.fft.rfftfreq(len(seg.samples), 1.0 / 96_000)
        in_band = spectrum[(freqs >= 1000) & (freqs <= 20_000)].sum()
        assert in_band / spectrum.sum() >= 0.9

    def test_peak_normalized(self):
        for cls in CLASS_REGISTRY:
            seg = synthesize_event(EventSpec(cls, 1.0, seed=0), 16_000)
            assert np.abs(seg.samples).max() == pytest.approx(1.0)

    def test_loudness_scales_amplitude(self):
        loud = synthesize_event(EventSpec("metal_clank", 1.0, 0, loudness=0.0), 16_000)
        quiet = synthesize_event(EventSpec("metal_clank", 1.0, 0, loudness=-20.0), 16_000)
        assert np.abs(quiet.samples).max() == pytest.approx(0.1, rel=1e-6)

    def test_classes_spectrally_distinct(self):
        # centroid frequencies should separate the knock family from bubbles
        def centroid(cls):
            seg = synthesize_event(EventSpec(cls, 2.0, seed=0), 96_000)
            spectrum = np.abs(np.fft.rfft(seg.samples)) ** 2
            freqs = np.fft.rfftfreq(len(seg.samples), 1.0 / 96_000)
            return (freqs * spectrum).sum() / spectrum.sum()

        assert centroid("knocking_concrete") < centroid("knocking_wood")
        assert centroid("knocking_wood") < centroid("bubbles_small")


class TestScene:
    def test_onset_outside_duration_rejected(self, geometry):
        with pytest.raises(InputError):
            Scene(geometry, [(EventSpec("knocking_wood", 1.0), (0.0, 5.0), 3.0)],
                  duration=2.0)

    def test_position_below_wall_rejected(self, geometry):
        with pytest.raises(InputError):
            Scene(geometry, [(EventSpec("knocking_wood", 1.0), (0.0, -1.0), 0.0)],
                  duration=2.0)

    def test_render_deterministic(self, geometry):
        scene = Scene(geometry, [(EventSpec("bubbles_small", 0.5, seed=2), (1.0, 3.0), 0.1)],
                      duration=1.0, noise_floor=-60.0, seed=4)
        a = render_scene(scene, 8000)
        b = render_scene(scene, 8000)
        for hid in a:
            assert np.array_equal(a[hid].samples, b[hid].samples)

    def test_nearest_hydrophone_receives_first_and_loudest(self, geometry):
        scene = Scene(geometry, [(EventSpec("metal_clank", 0.5, seed=1), (45.0, 2.0), 0.0)],
                      duration=2.0, noise_floor=float("-inf"), seed=0)
        chans = render_scene(scene, 16_000)
        onsets = {h: int(np.argmax(np.abs(chans[h].samples) > 1e-9)) for h in chans}
        assert onsets["H1"] < onsets["H2"] < onsets["H3"]
        powers = {h: (chans[h].samples ** 2).sum() for h in chans}
        assert powers["H1"] > powers["H2"] > powers["H3"]

    def test_truncation_warns(self, geometry):
        scene = Scene(geometry, [(EventSpec("plastic_scratching", 1.0, seed=0),
                                  (0.0, 5.0), 0.9)], duration=1.0)
        with pytest.warns(UserWarning, match="truncated"):
            render_scene(scene, 8000)


class TestAcquisitionLoop:
    def test_sixty_seconds_gives_ten_invocations(self):
        sr = 1000
        stream = [np.zeros(sr) for _ in range(60)]
        report = acquisition_loop(iter(stream), lambda b: b.n_samples, sr,
                                  duration=6.0)
        assert report.invocations == 10
        assert report.dropped == 0
        assert all(r == 6000 for r in report.results)

    def test_partial_trailing_buffer_not_dispatched(self):
        sr = 1000
        report = acquisition_loop(iter([np.zeros(sr * 8)]), lambda b: None, sr,
                                  duration=6.0)
        assert report.invocations == 1

    def test_sustained_overrun_raises_with_drop_count(self):
        sr = 1000
        stream = [np.zeros(sr) for _ in range(60)]
        with pytest.raises(BufferOverrunError) as exc:
            acquisition_loop(iter(stream), lambda b: None, sr, duration=6.0,
                             queue_capacity=2, handler_latency=lambda b: 12.0)
        assert exc.value.dropped > 0

    def test_slow_but_recoverable_handler_keeps_all_buffers(self):
        sr = 1000
        stream = [np.zeros(sr) for _ in range(30)]
        report = acquisition_loop(iter(stream), lambda b: None, sr, duration=6.0,
                                  queue_capacity=4, handler_latency=lambda b: 10.0)
        assert report.invocations == 5
        assert report.max_backlog >= 2

    def test_invalid_capacity(self):
        with pytest.raises(ConfigurationError):
            acquisition_loop(iter([]), lambda b: None, 1000, queue_capacity=0)
