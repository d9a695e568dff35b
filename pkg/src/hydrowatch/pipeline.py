"""Live recognition pipeline: preprocess -> encode -> classify -> anomaly
-> localize -> assess, with per-stage timings and error recording."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioSegment
from .dsp import MelSpectrogram, stft, to_mel
from .errors import HydrowatchError
from .localization import (ArrayGeometry, LocalizationResult, SearchSpec,
                           estimate_delays, solve_position)
from .nnet import (AutoencoderModel, MlpModel, ae_encode_batch,
                   ae_reconstruction_errors, mlp_predict)
from .risk import RiskAssessment, RiskPolicy, assess

STAGES = ("preprocess", "encode", "classify", "anomaly", "localize", "assess")


@dataclass
class PipelineModels:
    autoencoder: AutoencoderModel
    classifier: MlpModel
    classes: list[str]


@dataclass
class ObservationRecord:
    observation_id: str
    channels: list[str]
    mel: MelSpectrogram
    class_probs: dict[str, float]
    anomaly_score: float
    location: LocalizationResult | None
    assessment: RiskAssessment
    timings: dict[str, float]
    stage_errors: dict[str, str] = field(default_factory=dict)
    policy_version: int = 1

    def to_dict(self) -> dict:
        return {
            "observation_id": self.observation_id,
            "channels": self.channels,
            "class_probs": self.class_probs,
            "anomaly_score": self.anomaly_score,
            "location": None if self.location is None else {
                "position": list(self.location.position),
                "residual": self.location.residual,
                "grid_step": self.location.grid_step,
                "region": self.location.region.description,
            },
            "assessment": self.assessment.to_dict(),
            "timings": self.timings,
            "stage_errors": self.stage_errors,
            "policy_version": self.policy_version,
        }


def run_pipeline(segments: dict[str, AudioSegment], models: PipelineModels,
                 policy: RiskPolicy, geometry: ArrayGeometry,
                 observation_id: str, mel_bands: int | None = None,
                 search: SearchSpec | None = None) -> ObservationRecord:
    """One observation through every stage.

    Localization failures (no detectable signal, ambiguous correlation)
    are recorded per-stage and leave the location empty; the record is
    always produced.
    """
    timings: dict[str, float] = {}
    errors: dict[str, str] = {}
    channels = sorted(segments)

    def timed(stage, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            timings[stage] = time.perf_counter() - t0

    # the loudest channel carries the event best; use it for the Mel view
    ref = max(channels, key=lambda h: (float(np.sqrt(np.mean(segments[h].samples ** 2))), h))
    bands = mel_bands if mel_bands is not None else models.autoencoder.n_mels
    mel = timed("preprocess", lambda: to_mel(stft(segments[ref]), bands=bands))

    latent = timed("encode", lambda: ae_encode_batch(models.autoencoder, [mel])[0])
    probs = timed("classify", lambda: mlp_predict(models.classifier, latent))
    class_probs = {c: float(p) for c, p in zip(models.classes, probs)}
    score = timed("anomaly", lambda: float(
        ae_reconstruction_errors(models.autoencoder, [mel])[0]))

    def localize():
        tdoa = estimate_delays({h: segments[h] for h in channels})
        return solve_position(tdoa, geometry, search)

    location = None
    try:
        location = timed("localize", localize)
    except HydrowatchError as exc:
        errors["localize"] = f"{type(exc).__name__}: {exc}"

    assessment = timed("assess", lambda: assess(
        class_probs, score, location, policy, observation_id=observation_id))

    return ObservationRecord(
        observation_id=observation_id, channels=channels, mel=mel,
        class_probs=class_probs, anomaly_score=score, location=location,
        assessment=assessment, timings=timings, stage_errors=errors,
        policy_version=policy.version)
