from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from hydrowatch.api import create_app
from hydrowatch.nnet import AutoencoderModel, MlpModel, save_model
from hydrowatch.pipeline import PipelineModels
from hydrowatch.risk import RiskPolicy
from hydrowatch.simulate import CLASS_REGISTRY

BANDS = 32
HIDDEN = 16


def make_models(seed=0):
    ae = AutoencoderModel(n_mels=BANDS, hidden_size=HIDDEN, seed=seed)
    mlp = MlpModel(n_in=2 * HIDDEN, n_classes=10, hidden_size=16, seed=seed)
    return PipelineModels(ae, mlp, sorted(CLASS_REGISTRY))


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "data", models=make_models(), policy=RiskPolicy())
    with TestClient(app) as c:
        yield c


def ingest(client, *, seed=0, loudness=0.0, class_id="metal_clank",
           position=(2.0, 5.0)):
    resp = client.post("/ingest/scene", json={
        "events": [{"class_id": class_id, "position": list(position),
                    "onset": 0.1, "seed": seed, "loudness": loudness}],
        "duration": 1.0, "noise_floor": -60.0, "seed": seed,
        "sample_rate": 16000})
    assert resp.status_code == 200, resp.text
    return resp.json()


class TestObservations:
    def test_ingest_returns_full_record(self, client):
        rec = ingest(client)
        assert rec["observation_id"] == "obs-000001"
        assert set(rec["class_probs"]) == set(CLASS_REGISTRY)
        assert rec["anomaly_score"] >= 0
        assert rec["assessment"]["level"] in ("NORMAL", "REVIEW", "ALERT", "ALARM")

    def test_get_observation_and_404(self, client):
        rec = ingest(client)
        assert client.get(f"/observations/{rec['observation_id']}").json() == rec
        assert client.get("/observations/nope").status_code == 404

    def test_queue_sorted_by_score_descending(self, client):
        for seed in range(4):
            ingest(client, seed=seed, loudness=-3.0 * seed)
        rows = client.get("/observations").json()["observations"]
        scores = [r["anomaly_score"] for r in rows]
        assert scores == sorted(scores, reverse=True)
        assert len({r["observation_id"] for r in rows}) == 4

    def test_cursor_pagination(self, client):
        for seed in range(5):
            ingest(client, seed=seed)
        first = client.get("/observations", params={"limit": 2}).json()
        assert len(first["observations"]) == 2
        assert first["next_cursor"] == 2
        second = client.get("/observations",
                            params={"limit": 2, "cursor": 2}).json()
        ids1 = {r["observation_id"] for r in first["observations"]}
        ids2 = {r["observation_id"] for r in second["observations"]}
        assert not ids1 & ids2
        last = client.get("/observations",
                          params={"limit": 2, "cursor": 4}).json()
        assert last["next_cursor"] is None


class TestObservationMedia:
    def test_mel_matrix_for_rendering(self, client):
        rec = ingest(client)
        resp = client.get(f"/observations/{rec['observation_id']}/mel")
        assert resp.status_code == 200
        body = resp.json()
        assert body["bands"] == BANDS
        assert len(body["values"]) == body["bands"]
        assert len(body["values"][0]) == body["frames"]
        flat = [v for row in body["values"] for v in row]
        assert all(-1.0 <= v <= 1.0 for v in flat)
        assert client.get("/observations/nope/mel").status_code == 404

    def test_audio_playback_download(self, client):
        rec = ingest(client)
        resp = client.get(f"/observations/{rec['observation_id']}/audio")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "audio/wav"
        assert resp.content[:4] == b"RIFF"
        assert client.get("/observations/nope/audio").status_code == 404


class TestLabeling:
    def test_label_durable_in_training_manifest(self, client):
        rec = ingest(client)
        obs_id = rec["observation_id"]
        resp = client.post(f"/observations/{obs_id}/label",
                           json={"label": "knocking_wood", "operator": "op1"})
        assert resp.status_code == 200
        rows = client.get("/training-manifest").json()["samples"]
        row = next(r for r in rows if r["sample_id"] == obs_id)
        assert row["label"] == "knocking_wood"

    def test_label_unknown_observation_404(self, client):
        resp = client.post("/observations/nope/label",
                           json={"label": "metal_clank", "operator": "op1"})
        assert resp.status_code == 404

    def test_unregistered_label_422(self, client):
        rec = ingest(client)
        resp = client.post(f"/observations/{rec['observation_id']}/label",
                           json={"label": "submarine", "operator": "op1"})
        assert resp.status_code == 422


class TestPolicy:
    def test_put_bumps_version_and_applies_to_new_observations(self, client):
        base = client.get("/policy").json()
        base["anomaly_threshold"] = 0.001
        resp = client.put("/policy", json=base)
        assert resp.status_code == 200
        assert resp.json()["version"] == base["version"] + 1
        assert client.get("/policy").json()["anomaly_threshold"] == 0.001

    def test_invalid_policy_rejected_with_message(self, client):
        base = client.get("/policy").json()
        base["priority"] = ["anomaly"]
        resp = client.put("/policy", json=base)
        assert resp.status_code == 422
        assert "priority" in resp.json()["detail"]

    def test_whatif_identical_draft_is_zero_delta(self, client):
        for seed in range(3):
            ingest(client, seed=seed)
        draft = client.get("/policy").json()
        out = client.post("/policy/whatif", json=draft).json()
        assert all(v == 0 for v in out["delta"].values())
        assert sum(out["baseline"].values()) == 3

    def test_whatif_tighter_thresholds_never_lower_levels(self, client):
        for seed in range(3):
            ingest(client, seed=seed)
        draft = client.get("/policy").json()
        draft["anomaly_threshold"] = 0.0
        draft["proximity_threshold"] = 1e6
        out = client.post("/policy/whatif", json=draft).json()

        def cum_at_least(counts, names):
            return sum(counts[n] for n in names)

        for tail in (("ALARM",), ("ALARM", "ALERT"),
                     ("ALARM", "ALERT", "REVIEW")):
            assert cum_at_least(out["draft"], tail) >= \
                cum_at_least(out["baseline"], tail)

    def test_whatif_does_not_mutate_active_policy(self, client):
        before = client.get("/policy").json()
        draft = dict(before, anomaly_threshold=0.0)
        client.post("/policy/whatif", json=draft)
        assert client.get("/policy").json() == before


class TestModels:
    def test_register_and_activate(self, client, tmp_path):
        path = tmp_path / "ae.npz"
        save_model(AutoencoderModel(n_mels=BANDS, hidden_size=HIDDEN, seed=9), path)
        assert client.post("/models/register",
                           json={"name": "ae-v2", "path": str(path)}).status_code == 200
        assert client.post("/models/activate",
                           json={"name": "ae-v2"}).status_code == 200
        models = client.get("/models").json()["models"]
        assert [m for m in models if m["name"] == "ae-v2"][0]["active"] is True
        # service still ingests after the swap
        ingest(client)

    def test_register_missing_path_422(self, client):
        resp = client.post("/models/register",
                           json={"name": "x", "path": "/does/not/exist"})
        assert resp.status_code == 422

    def test_activate_unknown_404(self, client):
        assert client.post("/models/activate",
                           json={"name": "ghost"}).status_code == 404


class TestEvents:
    def test_ingest_publishes_assessment_event(self, client):
        state = client.app.state.service
        queue = state.subscribe()
        try:
            ingest(client)
            event = json.loads(queue.get_nowait())
        finally:
            state.unsubscribe(queue)
        assert event["observation_id"] == "obs-000001"
        assert "level" in event

    def test_events_endpoint_streams(self, tmp_path):
        # the in-process test transport buffers whole responses, so exercise
        # the live stream against a real loopback server
        import socket
        import threading

        import httpx
        import uvicorn

        from hydrowatch.api import create_app

        app = create_app(tmp_path / "data", models=make_models(),
                         policy=RiskPolicy())
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1",
                                               port=port, log_level="error"))
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            base = f"http://127.0.0.1:{port}"
            for _ in range(100):
                if server.started:
                    break
                threading.Event().wait(0.05)
            assert server.started
            with httpx.stream("GET", f"{base}/events", timeout=10.0) as stream:
                resp = httpx.post(f"{base}/ingest/scene", json={
                    "events": [{"class_id": "metal_clank",
                                "position": [2.0, 5.0], "onset": 0.1}],
                    "duration": 1.0, "sample_rate": 16000}, timeout=60.0)
                assert resp.status_code == 200
                for line in stream.iter_lines():
                    if line.startswith("data: "):
                        event = json.loads(line[len("data: "):])
                        break
            assert event["observation_id"] == "obs-000001"
            assert "level" in event
        finally:
            server.should_exit = True
            thread.join(timeout=10)
