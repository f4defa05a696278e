"""Binary-classification metrics: confusion counts, ROC/AUC with the
tie-aware trapezoid (equal to the pairwise-comparison statistic), and the
health-index mapping."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from swallowmon.signal_model import LabeledDataset


@dataclass(frozen=True)
class HealthIndex:
    """Complement of the impaired-class probability; higher is healthier."""

    value: float


def health_index(p_patient: float) -> HealthIndex:
    p = float(p_patient)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p_patient}")
    return HealthIndex(value=1.0 - p)


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc: tuple[tuple[float, float], ...]
    auc: float
    threshold: float


def roc_points(scores, labels) -> tuple[tuple[float, float], ...]:
    """(fpr, tpr) at every distinct score threshold, from (0,0) to (1,1).

    Tied scores move as one group, so the curve takes the diagonal across
    them and the trapezoid area scores each tied pair half a point —
    exactly the pairwise-comparison convention.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1).astype(int)
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = int(np.count_nonzero(y == 0))
    order = np.argsort(-s, kind="stable")
    ss, yy = s[order], y[order]
    tps = np.cumsum(yy == 1)
    fps = np.cumsum(yy == 0)
    group_end = np.r_[ss[1:] != ss[:-1], True]
    points = [(0.0, 0.0)]
    for i in np.flatnonzero(group_end):
        points.append((fps[i] / n_neg, tps[i] / n_pos))
    return tuple(points)


def _trapezoid(points) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def metrics_from_scores(scores, labels, threshold: float = 0.5) -> Metrics:
    """Full metric set from raw scores; needs both classes present.

    The decision rule is ``score >= threshold`` so raising the threshold
    can only shrink the predicted-positive set.  Precision/recall/F1 fall
    back to 0 when their denominator is empty.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1).astype(int)
    if s.size == 0 or s.size != y.size:
        raise ValueError("scores and labels must be equal-length and non-empty")
    if not set(np.unique(y)) <= {0, 1}:
        raise ValueError("labels must be 0 or 1")
    if len(set(np.unique(y))) < 2:
        raise ValueError("both classes are required")

    predicted = s >= threshold
    tp = int(np.count_nonzero(predicted & (y == 1)))
    fp = int(np.count_nonzero(predicted & (y == 0)))
    tn = int(np.count_nonzero(~predicted & (y == 0)))
    fn = int(np.count_nonzero(~predicted & (y == 1)))
    accuracy = (tp + tn) / s.size
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    roc = roc_points(s, y)
    return Metrics(
        tp=tp, fp=fp, tn=tn, fn=fn,
        accuracy=accuracy, precision=precision, recall=recall, f1=f1,
        roc=roc, auc=_trapezoid(roc), threshold=float(threshold),
    )


def evaluate(net, dataset: LabeledDataset, threshold: float = 0.5) -> Metrics:
    """Score every event in inference mode and tabulate the metrics."""
    if not dataset.items:
        raise ValueError("dataset is empty")
    x, y, _ = net.prepare(dataset)
    scores = net.batch_scores(x)
    return metrics_from_scores(scores, y.astype(int), threshold=threshold)


def metrics_to_json(m: Metrics) -> str:
    return json.dumps(asdict(m))


def metrics_from_json(blob: str) -> Metrics:
    raw = json.loads(blob)
    raw["roc"] = tuple((float(a), float(b)) for a, b in raw["roc"])
    return Metrics(**raw)
