#!/usr/bin/env python3
"""Train the time-series classifier on a synthetic cohort, audit its
gradients, and race it against the spectrogram variant."""

import numpy as np

from swallowmon import (
    Model2DConfig,
    ModelConfig,
    Network,
    Network2D,
    TrainConfig,
    compare_models,
    evaluate,
    gradient_check,
    health_index,
    make_corpus,
    train,
)
from swallowmon.classifier import trainlog_to_csv

# A desk-sized cohort: 3 healthy + 3 dysphagic subjects, 6 events each.
corpus = make_corpus(3, 3, 6, seed=13)
print(f"corpus: {len(corpus.items)} events, {len(corpus.subjects())} subjects")

# Before trusting training at all: finite differences vs backprop.
net = Network(ModelConfig(seed=1))
rng = np.random.default_rng(0)
err = gradient_check(net, rng.standard_normal((2, 4, 1000)),
                     np.array([0.0, 1.0]), n_samples=60)
print(f"gradient check, max relative error: {err:.2e}")

# Train; subjects are split disjointly so validation is honest.
log = train(net, corpus, TrainConfig(iterations=40, batch_size=8, seed=2))
print(f"train subjects: {log.train_subjects}")
print(f"val subjects:   {log.val_subjects}")
print(f"loss {log.initial_train_loss:.3f} -> {log.train_loss[-1]:.3f}, "
      f"best iteration {log.best_iteration + 1}")

metrics = evaluate(net, corpus)
print(f"whole-corpus accuracy {metrics.accuracy:.3f}  auc {metrics.auc:.3f}")

# The classifier outputs p(dysphagia); the health index is its complement.
scores = [net.forward(net.prepare_segment(item.segment)) for item in corpus.items[:3]]
for item, p in zip(corpus.items[:3], scores):
    hi = health_index(p)
    print(f"  {item.subject_id}: p={p:.3f}  health index {hi.value:.3f}")

# First rows of the training log, CSV-ready for any plotting tool.
print("\n" + "\n".join(trainlog_to_csv(log).splitlines()[:4]))

# Same data, both architectures, same split: the comparison table.
report = compare_models(corpus, model_seed=1,
                        train_config=TrainConfig(iterations=30, batch_size=8, seed=3))
print(f"\n{'model':8s}" + "".join(f"{m:>12s}" for m in report.metric_names))
for row in report.rows:
    print(f"{row.name:8s}" + "".join(f"{v:12.3f}" for v in row.metric_values().values()))
print("winner by metric:", report.winner_by_metric)
