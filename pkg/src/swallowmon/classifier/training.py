"""Deterministic mini-batch training, subject-wise splitting, and the
finite-difference gradient audit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from swallowmon.classifier.layers import bce_with_logits
from swallowmon.signal_model import LabeledDataset


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 200
    batch_size: int = 16
    learning_rate: float = 1e-3
    momentum: float = 0.9
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")


@dataclass(frozen=True)
class TrainLog:
    """Per-iteration curves plus the pre-training baseline.

    Train-side entries are whole-training-set losses under that set's own
    batch statistics, so they depend only on the parameters — a zero
    learning rate yields an exactly constant curve.  Validation entries use
    the running statistics, exactly as inference will.
    """

    initial_train_loss: float
    initial_val_loss: float
    train_loss: tuple[float, ...]
    train_accuracy: tuple[float, ...]
    val_loss: tuple[float, ...]
    val_accuracy: tuple[float, ...]
    best_iteration: int
    train_subjects: tuple[str, ...]
    val_subjects: tuple[str, ...]


def split_by_subject(subjects, labels, val_fraction: float, seed) -> tuple:
    """Hold out whole subjects, at least one per class.

    Per class the validation side gets ``max(1, round(val_fraction * n))``
    subjects (capped so training keeps at least one).  Returns
    ``(train_mask, val_mask, train_subjects, val_subjects)``.
    """
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    subjects = np.asarray(subjects)
    labels = np.asarray(labels)
    uniq, first = np.unique(subjects, return_index=True)
    subject_label = {s: int(labels[i]) for s, i in zip(uniq, first)}

    rng = np.random.default_rng(seed)
    chosen: list[str] = []
    for cls in (0, 1):
        pool = sorted(s for s, c in subject_label.items() if c == cls)
        if not pool:
            continue
        k = max(1, round(val_fraction * len(pool)))
        if len(pool) > 1:
            k = min(k, len(pool) - 1)
        perm = rng.permutation(len(pool))
        chosen.extend(pool[i] for i in perm[:k])

    val_mask = np.isin(subjects, chosen)
    val_subjects = tuple(sorted(chosen))
    train_subjects = tuple(sorted(set(subject_label) - set(chosen)))
    return ~val_mask, val_mask, train_subjects, val_subjects


def _set_loss_accuracy(net, x, y, batch_stats: bool) -> tuple[float, float]:
    z = net.logits(net._validate(x), batch_stats=batch_stats)
    loss, _ = bce_with_logits(z, y)
    accuracy = float(np.mean((z >= 0.0) == (y >= 0.5)))
    return loss, accuracy


def train(net, dataset: LabeledDataset, tc: TrainConfig) -> TrainLog:
    """Momentum SGD on binary cross-entropy with a subject-disjoint split.

    The velocity update is ``v <- momentum * v + g`` followed by
    ``w <- w - learning_rate * v``.  After the last iteration the network
    is restored to the snapshot with the lowest validation loss seen
    (the untrained starting point included), and the log is returned.
    Fully deterministic for a given (net seed, tc.seed, dataset).
    """
    x, y, subjects = net.prepare(dataset)
    if set(np.unique(y)) != {0.0, 1.0}:
        raise ValueError("training needs both classes present")
    for cls in (0, 1):
        if len(set(subjects[y == cls])) < 2:
            raise ValueError("need at least 2 subjects per class to split by subject")

    split_seed, shuffle_seed = np.random.SeedSequence(tc.seed).spawn(2)
    train_mask, val_mask, train_subjects, val_subjects = split_by_subject(
        subjects, y, tc.val_fraction, split_seed
    )
    x_tr, y_tr = x[train_mask], y[train_mask]
    x_va, y_va = x[val_mask], y[val_mask]

    params = net.parameter_items()
    velocity = [np.zeros_like(arr) for _, arr in params]
    shuffle_rng = np.random.default_rng(shuffle_seed)

    initial_train_loss, _ = _set_loss_accuracy(net, x_tr, y_tr, batch_stats=True)
    initial_val_loss, _ = _set_loss_accuracy(net, x_va, y_va, batch_stats=False)
    best_loss = initial_val_loss
    best_iteration = -1
    best_snapshot = net.snapshot()

    train_loss, train_acc, val_loss, val_acc = [], [], [], []
    n_train = len(y_tr)
    for iteration in range(tc.iterations):
        order = shuffle_rng.permutation(n_train)
        for start in range(0, n_train, tc.batch_size):
            batch = order[start : start + tc.batch_size]
            net.forward_backward(x_tr[batch], y_tr[batch], update_stats=True)
            for (_, p), (_, g), v in zip(params, net.gradient_items(), velocity):
                v *= tc.momentum
                v += g
                p -= tc.learning_rate * v

        tl, ta = _set_loss_accuracy(net, x_tr, y_tr, batch_stats=True)
        vl, va = _set_loss_accuracy(net, x_va, y_va, batch_stats=False)
        train_loss.append(tl)
        train_acc.append(ta)
        val_loss.append(vl)
        val_acc.append(va)
        if vl < best_loss:
            best_loss = vl
            best_iteration = iteration
            best_snapshot = net.snapshot()

    net.restore(best_snapshot)
    return TrainLog(
        initial_train_loss=initial_train_loss,
        initial_val_loss=initial_val_loss,
        train_loss=tuple(train_loss),
        train_accuracy=tuple(train_acc),
        val_loss=tuple(val_loss),
        val_accuracy=tuple(val_acc),
        best_iteration=best_iteration,
        train_subjects=train_subjects,
        val_subjects=val_subjects,
    )


def gradient_check(net, inputs, labels, epsilon: float = 1e-5,
                   n_samples: int = 200, seed: int = 0,
                   zero_tolerance: float = 1e-7) -> float:
    """Worst relative disagreement between backprop and central differences.

    At least ``n_samples`` parameters are probed, spread so every parameter
    array of every layer contributes.  The relative error divides by
    ``max(|analytic|, |numeric|, 1e-12)``, which keeps dead parameters
    (both sides ~0) from blowing up the ratio.

    Components where both estimates fall below ``zero_tolerance`` count as
    agreeing: a central difference of a float64 loss L resolves nothing
    finer than ~ulp(L)/(2*epsilon) (about 5e-12 here), so beneath that
    floor the numeric side is rounding noise — e.g. a convolution bias
    whose channel never clips has an exactly-zero gradient (the shift it
    causes is removed by batch-norm mean subtraction) yet differences as
    noise.  A corrupted backward pass still shows up, since it perturbs
    gradients at their own scale, far above the floor.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    net.forward_backward(x, y, update_stats=False)
    params = net.parameter_items()
    analytic = [g.copy() for _, g in net.gradient_items()]

    rng = np.random.default_rng(seed)
    per_array = max(1, math.ceil(n_samples / len(params)))
    worst = 0.0
    for (_, arr), grad in zip(params, analytic):
        flat = arr.reshape(-1)
        gf = grad.reshape(-1)
        picks = rng.choice(flat.size, size=min(per_array, flat.size), replace=False)
        for i in picks:
            saved = flat[i]
            flat[i] = saved + epsilon
            plus = net.loss(x, y)
            flat[i] = saved - epsilon
            minus = net.loss(x, y)
            flat[i] = saved
            numeric = (plus - minus) / (2.0 * epsilon)
            if max(abs(gf[i]), abs(numeric)) < zero_tolerance:
                continue
            err = abs(gf[i] - numeric) / max(abs(gf[i]), abs(numeric), 1e-12)
            worst = max(worst, float(err))
    return worst


def trainlog_to_csv(log: TrainLog) -> str:
    """One row per iteration; floats in shortest round-trip form."""
    lines = ["iteration,train_loss,train_accuracy,val_loss,val_accuracy"]
    for i, (tl, ta, vl, va) in enumerate(
        zip(log.train_loss, log.train_accuracy, log.val_loss, log.val_accuracy), start=1
    ):
        lines.append(f"{i},{tl!r},{ta!r},{vl!r},{va!r}")
    return "\n".join(lines) + "\n"
