"""Side-by-side training of the time-series and spectrogram classifiers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from swallowmon.classifier.metrics import metrics_from_scores
from swallowmon.classifier.network import (
    Model2DConfig,
    ModelConfig,
    build_2d_network,
    build_network,
)
from swallowmon.classifier.training import TrainConfig, train
from swallowmon.signal_model import LabeledDataset

METRIC_NAMES = ("accuracy", "auc", "precision", "sensitivity", "f1")


@dataclass(frozen=True)
class ModelReport:
    """One comparison row plus the raw per-event scores behind it."""

    name: str
    accuracy: float
    auc: float
    precision: float
    sensitivity: float
    f1: float
    val_scores: tuple[float, ...]
    val_labels: tuple[int, ...]

    def metric_values(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRIC_NAMES}


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ModelReport, ...]
    winner_by_metric: dict[str, str] = field(default_factory=dict)
    metric_names: tuple[str, ...] = METRIC_NAMES


def compare_models(dataset: LabeledDataset, model_seed: int = 0,
                   train_config: TrainConfig | None = None) -> ComparisonReport:
    """Train both model families under identical seeds and splits.

    Both networks are initialized from ``model_seed``, trained with the
    same ``TrainConfig`` (hence the same subject-disjoint split), and
    scored on the held-out subjects.  Per-event scores are kept in the
    report so every metric can be recomputed from it.
    """
    tc = train_config if train_config is not None else TrainConfig()
    builds = (
        ("cnn_1d", build_network(ModelConfig(seed=model_seed))),
        ("cnn_2d", build_2d_network(Model2DConfig(seed=model_seed))),
    )
    rows = []
    for name, net in builds:
        log = train(net, dataset, tc)
        held_out = set(log.val_subjects)
        val_items = [it for it in dataset.items if it.subject_id in held_out]
        x, y, _ = net.prepare(LabeledDataset(items=val_items, split_seed=dataset.split_seed))
        scores = net.batch_scores(x)
        m = metrics_from_scores(scores, y.astype(int), threshold=0.5)
        rows.append(
            ModelReport(
                name=name,
                accuracy=m.accuracy,
                auc=m.auc,
                precision=m.precision,
                sensitivity=m.recall,
                f1=m.f1,
                val_scores=tuple(float(v) for v in scores),
                val_labels=tuple(int(v) for v in y),
            )
        )

    winner = {}
    for metric in METRIC_NAMES:
        a = rows[0].metric_values()[metric]
        b = rows[1].metric_values()[metric]
        winner[metric] = rows[0].name if a > b else rows[1].name if b > a else "tie"
    return ComparisonReport(rows=tuple(rows), winner_by_metric=winner)


def comparison_to_json(report: ComparisonReport) -> str:
    return json.dumps(
        {
            "metric_names": list(report.metric_names),
            "winner_by_metric": report.winner_by_metric,
            "rows": [asdict(r) for r in report.rows],
        }
    )


def comparison_from_json(blob: str) -> ComparisonReport:
    raw = json.loads(blob)
    rows = []
    for r in raw["rows"]:
        r = dict(r)
        r["val_scores"] = tuple(float(v) for v in r["val_scores"])
        r["val_labels"] = tuple(int(v) for v in r["val_labels"])
        rows.append(ModelReport(**r))
    return ComparisonReport(
        rows=tuple(rows),
        winner_by_metric=dict(raw["winner_by_metric"]),
        metric_names=tuple(raw["metric_names"]),
    )
