from __future__ import annotations

import numpy as np
import pytest

from hydrowatch.audio import AudioSegment
from hydrowatch.errors import InputError, NotFoundError
from hydrowatch.store import SampleStore


def grid_segment(rng, sr=8000, duration=0.5):
    # samples on the 24-bit grid round-trip bit-exactly
    raw = np.round(rng.normal(scale=0.2, size=int(sr * duration)) * (1 << 23))
    samples = np.clip(raw, -(1 << 23), (1 << 23) - 1) / (1 << 23)
    return AudioSegment(samples, sr, duration)


@pytest.fixture
def store(tmp_path):
    return SampleStore(tmp_path / "store")


class TestStoreFetch:
    def test_round_trip_bit_exact(self, store, rng):
        seg = grid_segment(rng)
        store.store_sample(seg, "s001", label="metal_clank")
        back = store.load_audio("s001")
        assert back.sample_rate == seg.sample_rate
        assert np.array_equal(back.samples, seg.samples)

    def test_metadata_round_trip(self, store, rng):
        store.store_sample(grid_segment(rng), "s001", label="bubbles_small",
                           anomaly_flag=True, provenance="live")
        s = store.fetch("s001")
        assert (s.label, s.anomaly_flag, s.provenance) == ("bubbles_small", True, "live")

    def test_duplicate_id_rejected(self, store, rng):
        store.store_sample(grid_segment(rng), "s001")
        with pytest.raises(InputError):
            store.store_sample(grid_segment(rng), "s001")

    def test_unknown_id(self, store):
        with pytest.raises(NotFoundError):
            store.fetch("nope")

    def test_unregistered_label_rejected(self, store, rng):
        with pytest.raises(InputError):
            store.store_sample(grid_segment(rng), "s001", label="submarine")

    def test_filters(self, store, rng):
        store.store_sample(grid_segment(rng), "s001", label="metal_clank",
                           anomaly_flag=True)
        store.store_sample(grid_segment(rng), "s002", label="bubbles_small")
        store.store_sample(grid_segment(rng), "s003", provenance="live")
        assert [s.sample_id for s in store.fetch_samples(anomaly=True)] == ["s001"]
        assert [s.sample_id for s in store.fetch_samples(label="bubbles_small")] == ["s002"]
        assert [s.sample_id for s in store.fetch_samples(provenance="live")] == ["s003"]
        assert len(store.fetch_samples()) == 3


class TestLabeling:
    def test_label_visible_with_operator_and_timestamp(self, store, rng):
        store.store_sample(grid_segment(rng), "s001")
        store.apply_label("s001", "knocking_wood", "op9")
        s = store.fetch("s001")
        assert s.label == "knocking_wood"
        event = s.label_history[-1]
        assert event.operator == "op9"
        assert event.timestamp

    def test_relabel_keeps_history(self, store, rng):
        store.store_sample(grid_segment(rng), "s001", label="knocking_wood")
        store.apply_label("s001", "metal_clank", "op1")
        s = store.fetch("s001")
        assert s.label == "metal_clank"
        assert [e.label for e in s.label_history] == ["knocking_wood", "metal_clank"]

    def test_label_unknown_sample(self, store):
        with pytest.raises(NotFoundError):
            store.apply_label("nope", "metal_clank", "op1")


class TestPersistence:
    def test_replay_reconstructs_state(self, tmp_path, rng):
        root = tmp_path / "store"
        first = SampleStore(root)
        seg = grid_segment(rng)
        first.store_sample(seg, "s001", label="knocking_wood", anomaly_flag=True)
        first.apply_label("s001", "metal_clank", "op2")

        second = SampleStore(root)
        s = second.fetch("s001")
        assert s.label == "metal_clank"
        assert [e.label for e in s.label_history] == ["knocking_wood", "metal_clank"]
        assert np.array_equal(second.load_audio("s001").samples, seg.samples)

    def test_manifest_rows(self, store, rng):
        store.store_sample(grid_segment(rng), "s002")
        store.store_sample(grid_segment(rng), "s001", label="bubbles_large")
        rows = store.manifest()
        assert [r["sample_id"] for r in rows] == ["s001", "s002"]
        assert rows[0]["label"] == "bubbles_large"
        assert set(rows[0]) >= {"sample_id", "path", "label", "anomaly_flag",
                                "provenance", "created_at"}
