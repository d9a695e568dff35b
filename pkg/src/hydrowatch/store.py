"""Directory-backed sample store: WAV payloads plus an append-only
JSON-lines manifest with label audit history.

Layout under the root directory:
  audio/<sample_id>.wav      raw audio
  manifest.jsonl             append-only event log (stored / labeled events)
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .audio import AudioSegment, read_wav, write_wav
from .errors import InputError, NotFoundError
from .simulate import CLASS_REGISTRY

PROVENANCES = ("experiment", "live", "operator-labeled")


@dataclass
class LabelEvent:
    label: str
    operator: str
    timestamp: str


@dataclass
class StoredSample:
    sample_id: str
    audio_path: str
    label: str | None
    anomaly_flag: bool
    provenance: str
    created_at: str
    duration: float
    sample_rate: int
    label_history: list[LabelEvent] = field(default_factory=list)

    def to_manifest_row(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "path": self.audio_path,
            "label": self.label,
            "anomaly_flag": self.anomaly_flag,
            "provenance": self.provenance,
            "created_at": self.created_at,
            "duration": self.duration,
            "sample_rate": self.sample_rate,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SampleStore:
    """Append-only store; concurrent reads, serialized writes."""

    def __init__(self, root, classes=None):
        self.root = Path(root)
        self.classes = set(classes) if classes is not None else set(CLASS_REGISTRY)
        self._lock = threading.Lock()
        (self.root / "audio").mkdir(parents=True, exist_ok=True)
        self._manifest_path = self.root / "manifest.jsonl"
        self._samples: dict[str, StoredSample] = {}
        if self._manifest_path.exists():
            self._replay()

    def _replay(self):
        with open(self._manifest_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["event"] == "stored":
                    row = event["sample"]
                    self._samples[row["sample_id"]] = StoredSample(
                        sample_id=row["sample_id"], audio_path=row["path"],
                        label=row["label"], anomaly_flag=row["anomaly_flag"],
                        provenance=row["provenance"], created_at=row["created_at"],
                        duration=row["duration"], sample_rate=row["sample_rate"])
                elif event["event"] == "labeled":
                    s = self._samples[event["sample_id"]]
                    s.label_history.append(LabelEvent(event["label"], event["operator"],
                                                      event["timestamp"]))
                    s.label = event["label"]

    def _append(self, event: dict):
        with open(self._manifest_path, "a") as fh:
            fh.write(json.dumps(event) + "\n")
            fh.flush()

    def store_sample(self, segment: AudioSegment, sample_id: str,
                     label: str | None = None, anomaly_flag: bool = False,
                     provenance: str = "experiment",
                     bit_depth: int = 24) -> StoredSample:
        if provenance not in PROVENANCES:
            raise InputError(f"unknown provenance: {provenance}")
        if label is not None and label not in self.classes:
            raise InputError(f"label {label!r} is not a registered class")
        with self._lock:
            if sample_id in self._samples:
                raise InputError(f"duplicate sample id: {sample_id}")
            rel = f"audio/{sample_id}.wav"
            write_wav(self.root / rel, segment.samples, segment.sample_rate,
                      bit_depth=bit_depth)
            sample = StoredSample(
                sample_id=sample_id, audio_path=rel, label=label,
                anomaly_flag=anomaly_flag, provenance=provenance,
                created_at=_now(), duration=segment.duration,
                sample_rate=segment.sample_rate)
            self._append({"event": "stored", "sample": sample.to_manifest_row()})
            if label is not None:
                ts = _now()
                sample.label_history.append(LabelEvent(label, "ingest", ts))
                self._append({"event": "labeled", "sample_id": sample_id,
                              "label": label, "operator": "ingest", "timestamp": ts})
            self._samples[sample_id] = sample
        return sample

    def apply_label(self, sample_id: str, label: str, operator: str) -> StoredSample:
        if label not in self.classes:
            raise InputError(f"label {label!r} is not a registered class")
        with self._lock:
            sample = self._samples.get(sample_id)
            if sample is None:
                raise NotFoundError(f"no such sample: {sample_id}")
            ts = _now()
            sample.label_history.append(LabelEvent(label, operator, ts))
            sample.label = label
            self._append({"event": "labeled", "sample_id": sample_id,
                          "label": label, "operator": operator, "timestamp": ts})
        return sample

    def fetch(self, sample_id: str) -> StoredSample:
        sample = self._samples.get(sample_id)
        if sample is None:
            raise NotFoundError(f"no such sample: {sample_id}")
        return sample

    def fetch_samples(self, label: str | None = None, anomaly: bool | None = None,
                      provenance: str | None = None) -> list[StoredSample]:
        out = []
        for sample in self._samples.values():
            if label is not None and sample.label != label:
                continue
            if anomaly is not None and sample.anomaly_flag != anomaly:
                continue
            if provenance is not None and sample.provenance != provenance:
                continue
            out.append(sample)
        return sorted(out, key=lambda s: s.sample_id)

    def load_audio(self, sample_id: str) -> AudioSegment:
        sample = self.fetch(sample_id)
        rate, data = read_wav(self.root / sample.audio_path)
        return AudioSegment.from_samples(data, rate, channel_id=sample_id)

    def manifest(self) -> list[dict]:
        """Current state, one row per sample, sorted by id."""
        return [s.to_manifest_row()
                for s in sorted(self._samples.values(), key=lambda s: s.sample_id)]

    def __len__(self) -> int:
        return len(self._samples)
