"""Rule-based risk aggregation over classification, anomaly, and location
signals, with operator-tunable policies.

Levels are ordered NORMAL < REVIEW < ALERT < ALARM. Each rule that fires
adds a trace entry; the assessment level is the maximum over fired rules,
so raising any signal with the rest fixed can only hold or raise the level.
The policy's priority order controls rule evaluation/trace order, not the
resulting level.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError
from .localization import LocalizationResult
from .simulate import CLASS_REGISTRY


class RiskLevel(IntEnum):
    NORMAL = 0
    REVIEW = 1
    ALERT = 2
    ALARM = 3


SIGNALS = ("classification", "anomaly", "localization")

# Placeholder defaults; deployments are expected to tune these.
DEFAULT_CLASS_WEIGHTS = {
    "knocking_wood": 0.5,
    "knocking_plastic": 0.5,
    "knocking_concrete": 0.6,
    "bubbles_small": 0.4,
    "bubbles_large": 0.5,
    "metal_clank": 0.7,
    "plastic_scratching": 0.5,
    "plastic_scratching_knocking": 0.6,
    "normal_environmental_noise": 0.0,
    "high_risk_danger": 1.0,
}


@dataclass
class RiskPolicy:
    class_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_WEIGHTS))
    anomaly_threshold: float = 0.5
    proximity_threshold: float = 20.0  # meters from the dam wall
    priority: tuple[str, ...] = SIGNALS
    notifications: dict[str, str] = field(default_factory=lambda: {
        "NORMAL": "none",
        "REVIEW": "queue_for_review",
        "ALERT": "notify_operator",
        "ALARM": "immediate_notification",
    })
    review_threshold: float = 0.25   # weighted classification score bars
    alert_threshold: float = 0.5
    alarm_threshold: float = 0.8
    version: int = 1

    def __post_init__(self):
        if sorted(self.priority) != sorted(SIGNALS):
            raise ConfigurationError(
                f"priority must totally order {SIGNALS}, got {self.priority}")
        for name in ("anomaly_threshold", "proximity_threshold",
                     "review_threshold", "alert_threshold", "alarm_threshold"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        missing = set(CLASS_REGISTRY) - set(self.class_weights)
        if missing:
            raise ConfigurationError(f"classes without risk weight: {sorted(missing)}")
        self.priority = tuple(self.priority)

    def to_json(self) -> str:
        return json.dumps({
            "class_weights": self.class_weights,
            "anomaly_threshold": self.anomaly_threshold,
            "proximity_threshold": self.proximity_threshold,
            "priority": list(self.priority),
            "notifications": self.notifications,
            "review_threshold": self.review_threshold,
            "alert_threshold": self.alert_threshold,
            "alarm_threshold": self.alarm_threshold,
            "version": self.version,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RiskPolicy":
        data = json.loads(text)
        data["priority"] = tuple(data.get("priority", SIGNALS))
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "RiskPolicy":
        return cls.from_json(Path(path).read_text())


@dataclass
class RuleTrace:
    rule: str
    signal: str
    value: float
    threshold: float
    level: RiskLevel


@dataclass
class RiskAssessment:
    level: RiskLevel
    signals: dict[str, float]
    trace: list[RuleTrace]
    observation_id: str | None = None
    notification: str = "none"

    def to_dict(self) -> dict:
        # non-finite signals (e.g. wall distance with no fix) are not JSON
        # representable; report them as null
        return {
            "level": self.level.name,
            "signals": {k: (v if np.isfinite(v) else None)
                        for k, v in self.signals.items()},
            "trace": [{"rule": t.rule, "signal": t.signal, "value": t.value,
                       "threshold": t.threshold, "level": t.level.name}
                      for t in self.trace],
            "observation_id": self.observation_id,
            "notification": self.notification,
        }


def _classification_score(class_probs: dict[str, float], policy: RiskPolicy) -> float:
    # weight-scaled confidence of the riskiest class
    return max((p * policy.class_weights[c] for c, p in class_probs.items()),
               default=0.0)


def assess(class_probs: dict[str, float], anomaly_score: float,
           location: LocalizationResult | None, policy: RiskPolicy,
           observation_id: str | None = None) -> RiskAssessment:
    """Evaluate the policy rule tree on one observation.

    The dam wall is the x-axis of the array frame, so a location's wall
    distance is its y coordinate.
    """
    for c in class_probs:
        if c not in policy.class_weights:
            raise ConfigurationError(f"class {c!r} has no risk weight in the policy")
    probs = np.array(list(class_probs.values()), dtype=np.float64)
    if len(probs) and (probs.min() < -1e-9 or abs(probs.sum() - 1.0) > 1e-6):
        raise InputError("class_probs must be a probability distribution")
    if anomaly_score < 0:
        raise InputError("anomaly_score must be non-negative")

    score = _classification_score(class_probs, policy)
    wall_distance = float(location.position[1]) if location is not None else np.inf
    anomalous = anomaly_score >= policy.anomaly_threshold
    near_wall = wall_distance <= policy.proximity_threshold

    signals = {"classification": score, "anomaly": float(anomaly_score),
               "localization": wall_distance}
    trace: list[RuleTrace] = []

    for signal in policy.priority:
        if signal == "classification":
            if score >= policy.alarm_threshold:
                trace.append(RuleTrace("classification_alarm", signal, score,
                                       policy.alarm_threshold, RiskLevel.ALARM))
            elif score >= policy.alert_threshold:
                trace.append(RuleTrace("classification_alert", signal, score,
                                       policy.alert_threshold, RiskLevel.ALERT))
            elif score >= policy.review_threshold:
                trace.append(RuleTrace("classification_review", signal, score,
                                       policy.review_threshold, RiskLevel.REVIEW))
        elif signal == "anomaly":
            if anomalous:
                trace.append(RuleTrace("anomaly_review", signal, float(anomaly_score),
                                       policy.anomaly_threshold, RiskLevel.REVIEW))
        elif signal == "localization":
            if near_wall and anomalous:
                trace.append(RuleTrace("proximity_anomaly_alarm", signal, wall_distance,
                                       policy.proximity_threshold, RiskLevel.ALARM))
            elif near_wall and score >= policy.alert_threshold:
                trace.append(RuleTrace("proximity_classification_alarm", signal,
                                       wall_distance, policy.proximity_threshold,
                                       RiskLevel.ALARM))

    level = max((t.level for t in trace), default=RiskLevel.NORMAL)
    return RiskAssessment(level=level, signals=signals, trace=trace,
                          observation_id=observation_id,
                          notification=policy.notifications.get(level.name, "none"))
