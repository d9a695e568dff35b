"""Classification evaluation, nearest-neighbor baseline, anomaly scoring,
rank-based ROC AUC, and the holdout-class anomaly protocol."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dsp import MelSpectrogram
from .errors import ConfigurationError, InputError
from .nnet import (TrainingConfig, ae_encode_batch, ae_reconstruction_errors,
                   ae_train, mlp_predict_batch, mlp_train)


@dataclass
class LabeledSample:
    mel: MelSpectrogram
    label: str
    sample_id: str
    source: str = "synthetic"  # lab | field | synthetic


@dataclass
class EvaluationReport:
    default_accuracy: float
    balanced_accuracy: float
    confusion: np.ndarray       # [classes x classes], mean frequency over runs
    classes: list[str]
    runs: int
    skipped: list[tuple[int, str]] = field(default_factory=list)  # (run, class) without test samples

    def to_dict(self) -> dict:
        return {
            "default_accuracy": self.default_accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "classes": self.classes,
            "confusion": self.confusion.tolist(),
            "runs": self.runs,
            "skipped": [list(s) for s in self.skipped],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        lines = ["metric,value",
                 f"default_accuracy,{self.default_accuracy}",
                 f"balanced_accuracy,{self.balanced_accuracy}",
                 f"runs,{self.runs}"]
        lines.append("confusion_reference," + ",".join(self.classes))
        for cls, row in zip(self.classes, self.confusion):
            lines.append(cls + "," + ",".join(f"{v:.6g}" for v in row))
        return "\n".join(lines) + "\n"


@dataclass
class AnomalyScore:
    sample_id: str
    score: float
    method: str  # AE | NN_BASELINE

    def __post_init__(self):
        if self.score < 0:
            raise InputError("anomaly score must be non-negative")


def split_dataset(samples, test_fraction: float, seed: int,
                  repetitions: int = 10):
    """Repeated random disjoint/exhaustive train-test partitions."""
    if not 0 < test_fraction < 1:
        raise ConfigurationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    samples = list(samples)
    rng = np.random.default_rng(seed)
    n_test = int(round(len(samples) * test_fraction))
    partitions = []
    classes = sorted({s.label for s in samples})
    for rep in range(repetitions):
        order = rng.permutation(len(samples))
        test = [samples[i] for i in order[:n_test]]
        train = [samples[i] for i in order[n_test:]]
        train_classes = {s.label for s in train}
        for cls in classes:
            if cls not in train_classes:
                warnings.warn(f"split {rep}: class {cls!r} absent from training partition")
        partitions.append((train, test))
    return partitions


def _flat(mel) -> np.ndarray:
    values = mel.values if isinstance(mel, MelSpectrogram) else np.asarray(mel)
    return values.reshape(-1)


def nn_baseline_predict(train, query) -> tuple[str, float]:
    """Class of the Euclidean-nearest training Mel; ties go to the lowest sample_id.

    This is the exhaustive enumeration the invariants reference; keep it
    brute-force.
    """
    train = list(train)
    if not train:
        raise InputError("empty training set")
    q = _flat(query)
    best = None
    for s in train:
        x = _flat(s.mel)
        if x.shape != q.shape:
            raise InputError("shape mismatch between query and training sample")
        d = float(np.sqrt(np.sum((x - q) ** 2)))
        key = (d, s.sample_id)
        if best is None or key < best[0]:
            best = (key, s)
    (dist, _), sample = best
    return sample.label, dist


class NearestNeighborClassifier:
    """Vectorized wrapper around the same tie-break contract."""

    def __init__(self, train):
        self.train = sorted(train, key=lambda s: s.sample_id)
        self._X = np.stack([_flat(s.mel) for s in self.train])

    def predict(self, query) -> str:
        q = _flat(query)
        d = np.sqrt(((self._X - q) ** 2).sum(axis=1))
        return self.train[int(np.argmin(d))].label

    def distance(self, query) -> float:
        q = _flat(query)
        return float(np.sqrt(((self._X - q) ** 2).sum(axis=1)).min())


def evaluate_classifier(predict_fn, partitions, classes=None) -> EvaluationReport:
    """Aggregate default/balanced accuracy and mean confusion over runs.

    predict_fn(train, test) -> predicted labels for the test samples.
    """
    partitions = list(partitions)
    if not partitions:
        raise InputError("need at least one partition")
    if classes is None:
        classes = sorted({s.label for train, test in partitions for s in train + test})
    idx = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion_sum = np.zeros((k, k))
    default_accs, balanced_accs = [], []
    skipped = []
    for run, (train, test) in enumerate(partitions):
        preds = predict_fn(train, test)
        conf = np.zeros((k, k))
        for s, p in zip(test, preds):
            conf[idx[s.label], idx[p]] += 1
        confusion_sum += conf
        total = conf.sum()
        default_accs.append(float(np.trace(conf) / total) if total else 0.0)
        recalls = []
        for c in classes:
            row = conf[idx[c]]
            if row.sum() == 0:
                skipped.append((run, c))
                continue
            recalls.append(row[idx[c]] / row.sum())
        balanced_accs.append(float(np.mean(recalls)))
    return EvaluationReport(
        default_accuracy=float(np.mean(default_accs)),
        balanced_accuracy=float(np.mean(balanced_accs)),
        confusion=confusion_sum / len(partitions),
        classes=list(classes),
        runs=len(partitions),
        skipped=skipped,
    )


def anomaly_scores(model_or_train, test, method: str = "AE") -> list[AnomalyScore]:
    """Reconstruction-RMSE (AE) or nearest-neighbor-distance scores."""
    test = list(test)
    if method == "AE":
        errors = ae_reconstruction_errors(model_or_train, [s.mel for s in test])
        return [AnomalyScore(s.sample_id, float(e), "AE") for s, e in zip(test, errors)]
    if method == "NN_BASELINE":
        nn = NearestNeighborClassifier(list(model_or_train))
        return [AnomalyScore(s.sample_id, nn.distance(s.mel), "NN_BASELINE") for s in test]
    raise InputError(f"unknown anomaly method: {method}")


def roc_auc(scores, is_anomaly) -> float:
    """Rank-based AUC with tie correction; equals the pairwise estimator."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(is_anomaly, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("roc_auc needs at least one positive and one negative")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # mid-rank, 1-based
        i = j + 1
    rank_sum_pos = ranks[labels].sum()
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc_bruteforce(scores, is_anomaly) -> float:
    """Pairwise oracle: P(random positive outscores random negative), ties 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(is_anomaly, dtype=bool)
    pos, neg = scores[labels], scores[~labels]
    if len(pos) == 0 or len(neg) == 0:
        raise InputError("needs at least one positive and one negative")
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins / (len(pos) * len(neg)))


def holdout_experiment(corpus, holdout_class: str, cfg: TrainingConfig,
                       hidden_size: int = 256, dropout_rate: float = 0.2,
                       test_fraction: float = 0.3,
                       majority_classes=()) -> tuple[float, float]:
    """Train the AE without the holdout class and score both anomaly methods.

    All holdout samples become test positives; a test split of the
    remaining classes provides the negatives. Returns (auc_ae, auc_baseline).
    """
    corpus = list(corpus)
    holdout = [s for s in corpus if s.label == holdout_class]
    rest = [s for s in corpus if s.label != holdout_class]
    if not holdout:
        raise InputError(f"holdout class {holdout_class!r} not present in corpus")
    if holdout_class in majority_classes:
        warnings.warn(f"holdout class {holdout_class!r} is a majority class")
    (train, test_neg) = split_dataset(rest, test_fraction, cfg.seed, repetitions=1)[0]
    test = test_neg + holdout
    labels = [s.label == holdout_class for s in test]

    model, _ = ae_train([s.mel for s in train], cfg,
                        hidden_size=hidden_size, dropout_rate=dropout_rate)
    ae = anomaly_scores(model, test, method="AE")
    nn = anomaly_scores(train, test, method="NN_BASELINE")
    return (roc_auc([a.score for a in ae], labels),
            roc_auc([a.score for a in nn], labels))


def train_and_predict_ae_mlp(train, test, ae_cfg: TrainingConfig,
                             mlp_cfg: TrainingConfig, classes,
                             hidden_size: int = 32, mlp_hidden: int = 64,
                             dropout_rate: float = 0.2):
    """The composite pipeline: AE encodings feed an MLP classifier."""
    idx = {c: i for i, c in enumerate(classes)}
    model, _ = ae_train([s.mel for s in train], ae_cfg,
                        hidden_size=hidden_size, dropout_rate=dropout_rate)
    enc_train = ae_encode_batch(model, [s.mel for s in train])
    enc_test = ae_encode_batch(model, [s.mel for s in test])
    mlp, _ = mlp_train(enc_train, [idx[s.label] for s in train], mlp_cfg,
                       n_classes=len(classes), hidden_size=mlp_hidden)
    probs = mlp_predict_batch(mlp, enc_test)
    return [classes[int(i)] for i in probs.argmax(axis=1)]
