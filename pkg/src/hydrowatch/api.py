"""HTTP operator service: anomaly review queue, labeling, policy tuning,
model activation, and a live assessment event stream (SSE)."""
from __future__ import annotations

import asyncio
import json
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, StreamingResponse
from pydantic import BaseModel

from .errors import ConfigurationError, InputError, NotFoundError
from .localization import ArrayGeometry
from .nnet import load_model
from .pipeline import ObservationRecord, PipelineModels, run_pipeline
from .risk import RiskLevel, RiskPolicy, assess
from .simulate import CLASS_REGISTRY, EventSpec, Scene, render_scene
from .store import SampleStore

DEFAULT_GEOMETRY = ArrayGeometry(
    {"H1": (50.0, 0.0), "H2": (0.0, 0.0), "H3": (-50.0, 0.0)}, 1430.0)
PAGE_SIZE = 50


class LabelRequest(BaseModel):
    label: str
    operator: str


class ActivateRequest(BaseModel):
    name: str


class SceneEvent(BaseModel):
    class_id: str
    position: tuple[float, float]
    onset: float = 0.0
    seed: int = 0
    loudness: float = 0.0


class SceneRequest(BaseModel):
    events: list[SceneEvent]
    duration: float = 6.0
    noise_floor: float = -60.0
    seed: int = 0
    sample_rate: int = 16000


class ServiceState:
    """All mutable service state; policy/model swaps are atomic snapshots."""

    def __init__(self, data_dir, models: PipelineModels | None = None,
                 policy: RiskPolicy | None = None,
                 geometry: ArrayGeometry = DEFAULT_GEOMETRY):
        self.data_dir = Path(data_dir)
        self.store = SampleStore(self.data_dir / "store")
        self.models = models
        self.model_registry: dict[str, dict] = {}
        self.policy = policy or RiskPolicy()
        self.geometry = geometry
        self.observations: dict[str, ObservationRecord] = {}
        self._counter = 0
        self._lock = threading.Lock()
        self._subscribers: list[asyncio.Queue] = []

    def next_observation_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"obs-{self._counter:06d}"

    def record(self, rec: ObservationRecord) -> None:
        with self._lock:
            self.observations[rec.observation_id] = rec
        event = json.dumps(rec.assessment.to_dict())
        for q in list(self._subscribers):
            q.put_nowait(event)

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue()
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q) -> None:
        if q in self._subscribers:
            self._subscribers.remove(q)

    def anomaly_page(self, flag: str | None, cursor: int, limit: int):
        records = list(self.observations.values())
        if flag == "anomaly":
            records = [r for r in records
                       if r.assessment.level >= RiskLevel.REVIEW
                       or r.anomaly_score >= self.policy.anomaly_threshold]
        records.sort(key=lambda r: (-r.anomaly_score, r.observation_id))
        page = records[cursor:cursor + limit]
        next_cursor = cursor + limit if cursor + limit < len(records) else None
        return page, next_cursor


def create_app(data_dir, models: PipelineModels | None = None,
               policy: RiskPolicy | None = None,
               geometry: ArrayGeometry = DEFAULT_GEOMETRY) -> FastAPI:
    app = FastAPI(title="hydrowatch")
    state = ServiceState(data_dir, models=models, policy=policy, geometry=geometry)
    app.state.service = state

    @app.get("/observations")
    def list_observations(flag: str | None = None, cursor: int = 0,
                          limit: int = PAGE_SIZE):
        page, next_cursor = state.anomaly_page(flag, cursor, limit)
        return {"observations": [r.to_dict() for r in page],
                "next_cursor": next_cursor}

    @app.get("/observations/{obs_id}")
    def get_observation(obs_id: str):
        rec = state.observations.get(obs_id)
        if rec is None:
            raise HTTPException(404, f"unknown observation: {obs_id}")
        return rec.to_dict()

    @app.get("/observations/{obs_id}/mel")
    def get_observation_mel(obs_id: str):
        """Spectrogram matrix for client-side rendering (no client DSP)."""
        rec = state.observations.get(obs_id)
        if rec is None:
            raise HTTPException(404, f"unknown observation: {obs_id}")
        return {"observation_id": obs_id,
                "bands": rec.mel.n_bands,
                "frames": rec.mel.n_frames,
                "values": rec.mel.values.tolist()}

    @app.get("/observations/{obs_id}/audio")
    def get_observation_audio(obs_id: str):
        try:
            sample = state.store.fetch(obs_id)
        except NotFoundError as exc:
            raise HTTPException(404, str(exc))
        return FileResponse(state.store.root / sample.audio_path,
                            media_type="audio/wav", filename=f"{obs_id}.wav")

    @app.post("/observations/{obs_id}/label")
    def label_observation(obs_id: str, req: LabelRequest):
        rec = state.observations.get(obs_id)
        if rec is None:
            raise HTTPException(404, f"unknown observation: {obs_id}")
        if req.label not in CLASS_REGISTRY:
            raise HTTPException(422, f"unregistered class: {req.label}")
        # label write is durable (manifest appended) before the ack returns
        try:
            state.store.apply_label(obs_id, req.label, req.operator)
        except NotFoundError as exc:
            raise HTTPException(404, str(exc))
        return {"ok": True, "observation_id": obs_id, "label": req.label}

    @app.get("/policy")
    def get_policy():
        return json.loads(state.policy.to_json())

    @app.put("/policy")
    def put_policy(body: dict):
        try:
            body = dict(body)
            body["version"] = state.policy.version + 1
            new_policy = RiskPolicy.from_json(json.dumps(body))
        except (ConfigurationError, TypeError, KeyError) as exc:
            raise HTTPException(422, f"invalid policy: {exc}")
        state.policy = new_policy  # applied to subsequent observations only
        return {"version": new_policy.version}

    @app.post("/policy/whatif")
    def whatif_policy(body: dict):
        """Replay stored observations under a draft policy; report level counts."""
        try:
            draft = dict(body)
            draft.setdefault("version", state.policy.version)
            draft_policy = RiskPolicy.from_json(json.dumps(draft))
        except (ConfigurationError, TypeError, KeyError) as exc:
            raise HTTPException(422, f"invalid policy: {exc}")
        counts = {lvl.name: 0 for lvl in RiskLevel}
        baseline = {lvl.name: 0 for lvl in RiskLevel}
        for rec in state.observations.values():
            baseline[rec.assessment.level.name] += 1
            replay = assess(rec.class_probs, rec.anomaly_score, rec.location,
                            draft_policy, observation_id=rec.observation_id)
            counts[replay.level.name] += 1
        return {"baseline": baseline, "draft": counts,
                "delta": {k: counts[k] - baseline[k] for k in counts}}

    @app.get("/models")
    def list_models():
        return {"models": [{"name": n, **meta} for n, meta in
                           sorted(state.model_registry.items())],
                "active": state.models is not None}

    @app.post("/models/register")
    def register_model(body: dict):
        name, path = body.get("name"), body.get("path")
        if not name or not path or not Path(path).exists():
            raise HTTPException(422, "need name and an existing model path")
        state.model_registry[name] = {"path": path, "active": False}
        return {"ok": True}

    @app.post("/models/activate")
    def activate_model(req: ActivateRequest):
        meta = state.model_registry.get(req.name)
        if meta is None:
            raise HTTPException(404, f"unknown model: {req.name}")
        model = load_model(meta["path"])
        from .nnet import AutoencoderModel
        if state.models is None:
            raise HTTPException(422, "no classifier loaded; start with full models")
        if isinstance(model, AutoencoderModel):
            new = PipelineModels(model, state.models.classifier, state.models.classes)
        else:
            new = PipelineModels(state.models.autoencoder, model, state.models.classes)
        for m in state.model_registry.values():
            m["active"] = False
        meta["active"] = True
        state.models = new  # atomic swap between observations
        return {"ok": True, "name": req.name}

    @app.post("/ingest/scene")
    def ingest_scene(req: SceneRequest):
        if state.models is None:
            raise HTTPException(422, "no models loaded")
        try:
            scene = Scene(state.geometry,
                          [(EventSpec(e.class_id, req.duration, e.seed, e.loudness),
                            e.position, e.onset) for e in req.events],
                          duration=req.duration, noise_floor=req.noise_floor,
                          seed=req.seed)
        except InputError as exc:
            raise HTTPException(422, str(exc))
        segments = render_scene(scene, req.sample_rate)
        policy = state.policy  # snapshot: updates apply to later observations
        obs_id = state.next_observation_id()
        rec = run_pipeline(segments, state.models, policy, state.geometry, obs_id)
        # retain the loudest channel so the observation can be labeled later
        ref = max(segments, key=lambda h: float(np.sqrt(np.mean(segments[h].samples ** 2))))
        state.store.store_sample(segments[ref], obs_id, provenance="live",
                                 anomaly_flag=rec.assessment.level >= RiskLevel.REVIEW)
        state.record(rec)
        return rec.to_dict()

    @app.get("/training-manifest")
    def training_manifest():
        return {"samples": state.store.manifest()}

    @app.get("/events")
    async def events(request: Request):
        q = state.subscribe()

        async def stream():
            try:
                while True:
                    if await request.is_disconnected():
                        break
                    try:
                        event = await asyncio.wait_for(q.get(), timeout=1.0)
                    except asyncio.TimeoutError:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {event}\n\n"
            finally:
                state.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
