"""Network assembly, input preparation, and JSON checkpoints.

Two classifier bodies share the same machinery:

* ``Network`` — three Conv1D/ReLU/max-pool stages over the raw (high-pass
  filtered) 4-channel time series, then batch norm on the flattened
  features, a ReLU hidden layer, and a single logit.
* ``Network2D`` — two Conv2D/ReLU/max-pool stages over per-channel
  magnitude spectrogram stacks, with the identical head.

Both emit the probability that a swallow event came from the impaired
class; the sigmoid keeps it strictly inside (0, 1).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from swallowmon.classifier.layers import (
    BatchNorm,
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    Layer,
    MaxPool1D,
    MaxPool2D,
    ReLU,
    bce_with_logits,
    sigmoid,
)
from swallowmon.dsp import apply_filter, design_butterworth_highpass, stft_spectrogram
from swallowmon.signal_model import LabeledDataset

HIGHPASS_CUTOFF_HZ = 100.0
HIGHPASS_ORDER = 8
_CHUNK = 64  # rows per slice when scoring large batches


def _conv1d_out_len(n: int, kernel: int, pool: int) -> int:
    return (n - kernel + 1) // pool


@dataclass(frozen=True)
class ModelConfig:
    """Shape of the time-series classifier (three conv/pool stages)."""

    input_len: int = 1000
    in_channels: int = 4
    conv_specs: tuple[tuple[int, int, int], ...] = ((8, 7, 4), (16, 5, 4), (32, 3, 4))
    fc_width: int = 64
    seed: int = 0

    def __post_init__(self):
        if len(self.conv_specs) != 3:
            raise ValueError("exactly 3 conv/pool stages are required")
        if self.input_len < 1 or self.in_channels < 1 or self.fc_width < 1:
            raise ValueError("input_len, in_channels, and fc_width must be positive")
        n = self.input_len
        for out_c, kernel, pool in self.conv_specs:
            if out_c < 1 or kernel < 1 or pool < 1:
                raise ValueError("conv spec entries must be positive")
            n = _conv1d_out_len(n, kernel, pool)
            if n < 1:
                raise ValueError(
                    f"input_len {self.input_len} collapses to nothing under {self.conv_specs}"
                )

    @property
    def feature_len(self) -> int:
        n = self.input_len
        for _, kernel, pool in self.conv_specs:
            n = _conv1d_out_len(n, kernel, pool)
        return n

    @property
    def flatten_size(self) -> int:
        return self.conv_specs[-1][0] * self.feature_len


@dataclass(frozen=True)
class Model2DConfig:
    """Shape of the spectrogram classifier (two conv/pool stages).

    Frame/bin dimensions are derived from the time-domain input length and
    the STFT geometry, so one config fixes the whole input contract.
    """

    input_len: int = 1000
    in_channels: int = 4
    stft_window: int = 64
    stft_hop: int = 32
    conv_specs: tuple[tuple[int, int, int], ...] = ((8, 3, 2), (16, 3, 2))
    fc_width: int = 64
    seed: int = 0

    def __post_init__(self):
        if len(self.conv_specs) != 2:
            raise ValueError("exactly 2 conv/pool stages are required")
        if self.input_len < 1 or self.in_channels < 1 or self.fc_width < 1:
            raise ValueError("input_len, in_channels, and fc_width must be positive")
        w = self.stft_window
        if w < 4 or (w & (w - 1)) != 0 or w > self.input_len:
            raise ValueError("stft_window must be a power of two within the input length")
        if self.stft_hop < 1:
            raise ValueError("stft_hop must be positive")
        h, b = self.input_frames, self.input_bins
        for out_c, kernel, pool in self.conv_specs:
            if out_c < 1 or kernel < 1 or pool < 1:
                raise ValueError("conv spec entries must be positive")
            h = (h - kernel + 1) // pool
            b = (b - kernel + 1) // pool
            if h < 1 or b < 1:
                raise ValueError(
                    f"spectrogram {self.input_frames}x{self.input_bins} collapses "
                    f"under {self.conv_specs}"
                )

    @property
    def input_frames(self) -> int:
        return (self.input_len - self.stft_window) // self.stft_hop + 1

    @property
    def input_bins(self) -> int:
        return self.stft_window // 2 + 1

    @property
    def flatten_size(self) -> int:
        h, b = self.input_frames, self.input_bins
        for _, kernel, pool in self.conv_specs:
            h = (h - kernel + 1) // pool
            b = (b - kernel + 1) // pool
        return self.conv_specs[-1][0] * h * b


def fit_length(channels: np.ndarray, n: int) -> np.ndarray:
    """Fit a (rows, L) array to exactly n columns.

    Short inputs are zero-padded on the right; long ones are cut to the
    central n samples, keeping the event (which sits mid-segment) intact.
    """
    length = channels.shape[-1]
    if length == n:
        return channels
    if length > n:
        start = (length - n) // 2
        return channels[..., start : start + n]
    pad = [(0, 0)] * (channels.ndim - 1) + [(0, n - length)]
    return np.pad(channels, pad)


class _SequentialNet:
    """Shared forward/backward plumbing over an ordered layer list."""

    kind = ""

    def __init__(self, named_layers: list[tuple[str, Layer]], bn_name: str):
        self._named = named_layers
        self.layers = [layer for _, layer in named_layers]
        self._bn_index = [name for name, _ in named_layers].index(bn_name)

    # -- parameter plumbing ------------------------------------------------

    def parameter_items(self) -> list[tuple[str, np.ndarray]]:
        """Trainable arrays as (dotted name, live array) in a stable order."""
        return [
            (f"{name}.{key}", arr)
            for name, layer in self._named
            for key, arr in layer.params.items()
        ]

    def gradient_items(self) -> list[tuple[str, np.ndarray]]:
        return [
            (f"{name}.{key}", layer.grads[key])
            for name, layer in self._named
            for key in layer.params
        ]

    def state_items(self) -> list[tuple[str, np.ndarray]]:
        """Non-trainable state: the batch-norm running statistics."""
        bn = self.layers[self._bn_index]
        name = self._named[self._bn_index][0]
        return [
            (f"{name}.running_mean", bn.running_mean),
            (f"{name}.running_var", bn.running_var),
        ]

    def snapshot(self) -> list[np.ndarray]:
        return [arr.copy() for _, arr in self.parameter_items() + self.state_items()]

    def restore(self, snap: list[np.ndarray]) -> None:
        for (_, arr), saved in zip(self.parameter_items() + self.state_items(), snap):
            arr[...] = saved

    # -- forward / backward -------------------------------------------------

    def _validate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _run(self, x, train, update_stats, start=0, stop=None):
        for _, layer in self._named[start:stop]:
            if isinstance(layer, BatchNorm):
                x = layer.forward(x, train=train, update_stats=update_stats)
            else:
                x = layer.forward(x, train=train)
        return x

    def logits(self, x: np.ndarray, train: bool = False, update_stats: bool = False,
               batch_stats: bool = False) -> np.ndarray:
        """Raw pre-sigmoid scores, shape (B,).

        ``batch_stats=True`` normalizes by the statistics of this batch
        (running estimates untouched) with the convolutional trunk run in
        fixed-size chunks, so whole-dataset losses are well defined.
        """
        if train:
            return self._run(x, True, update_stats)[:, 0]
        if x.shape[0] <= _CHUNK and not batch_stats:
            return self._run(x, False, False)[:, 0]
        feats = np.concatenate(
            [
                self._run(x[i : i + _CHUNK], False, False, stop=self._bn_index)
                for i in range(0, x.shape[0], _CHUNK)
            ]
        )
        if batch_stats:
            out = self.layers[self._bn_index].forward(feats, train=True, update_stats=False)
            out = self._run(out, False, False, start=self._bn_index + 1)
        else:
            out = self._run(feats, False, False, start=self._bn_index)
        return out[:, 0]

    def forward(self, x: np.ndarray, train: bool = False):
        """Impaired-class probability; float for one sample, (B,) for a batch."""
        arr = self._validate(x)
        single = arr.shape[0] == 1 and np.asarray(x).ndim == arr.ndim - 1
        p = sigmoid(self.logits(arr, train=train))
        return float(p[0]) if single else p

    def loss(self, x: np.ndarray, y: np.ndarray, update_stats: bool = False) -> float:
        """Training-mode (batch statistics) mean BCE without side effects."""
        z = self.logits(self._validate(x), train=True, update_stats=update_stats)
        return bce_with_logits(z, y)[0]

    def forward_backward(self, x: np.ndarray, y: np.ndarray,
                         update_stats: bool = True) -> float:
        """One training-mode pass filling every layer's gradients."""
        z = self.logits(self._validate(x), train=True, update_stats=update_stats)
        loss, dz = bce_with_logits(z, y)
        grad = dz[:, None]
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return loss

    def batch_scores(self, x: np.ndarray, batch_stats: bool = False) -> np.ndarray:
        return sigmoid(self.logits(self._validate(x), batch_stats=batch_stats))


def _prepare_time_series(dataset: LabeledDataset, input_len: int, in_channels: int):
    """Corpus -> (stacked filtered channels, labels, subject ids)."""
    if not dataset.items:
        raise ValueError("dataset is empty")
    fs = dataset.items[0].segment.sample_rate_hz
    for it in dataset.items:
        if it.segment.sample_rate_hz != fs:
            raise ValueError("all segments must share one sample rate")
        if it.segment.n_channels != in_channels:
            raise ValueError(
                f"segment has {it.segment.n_channels} channels, expected {in_channels}"
            )
    stacked = np.concatenate(
        [fit_length(it.segment.channels, input_len) for it in dataset.items]
    )
    hp = design_butterworth_highpass(HIGHPASS_CUTOFF_HZ, fs, order=HIGHPASS_ORDER)
    filtered = apply_filter(hp, stacked).reshape(len(dataset.items), in_channels, input_len)
    y = np.array([it.label for it in dataset.items], dtype=np.float64)
    subjects = np.array([it.subject_id for it in dataset.items])
    return filtered, y, subjects, fs


def _filter_fitted(segment, input_len: int, in_channels: int) -> np.ndarray:
    """Length-fit then high-pass one segment; row-identical to the batch path."""
    if segment.n_channels != in_channels:
        raise ValueError(
            f"segment has {segment.n_channels} channels, expected {in_channels}"
        )
    hp = design_butterworth_highpass(
        HIGHPASS_CUTOFF_HZ, segment.sample_rate_hz, order=HIGHPASS_ORDER
    )
    return apply_filter(hp, fit_length(segment.channels, input_len))


class Network(_SequentialNet):
    """Time-series classifier: 3x (Conv1D, ReLU, max-pool) + BN + dense head."""

    kind = "cnn1d"

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        named: list[tuple[str, Layer]] = []
        c_in = cfg.in_channels
        for i, (c_out, kernel, pool) in enumerate(cfg.conv_specs, start=1):
            named.append((f"conv{i}", Conv1D(c_in, c_out, kernel, rng=rng)))
            named.append((f"relu{i}", ReLU()))
            named.append((f"pool{i}", MaxPool1D(pool)))
            c_in = c_out
        named.append(("flatten", Flatten()))
        named.append(("bn", BatchNorm(cfg.flatten_size)))
        named.append(("fc1", Dense(cfg.flatten_size, cfg.fc_width, rng=rng)))
        named.append(("relu_fc", ReLU()))
        named.append(("out", Dense(cfg.fc_width, 1, rng=rng)))
        super().__init__(named, "bn")

    def _validate(self, x):
        arr = np.asarray(x, dtype=np.float64)
        want = (self.cfg.in_channels, self.cfg.input_len)
        if arr.shape == want:
            return arr[None]
        if arr.ndim == 3 and arr.shape[1:] == want:
            return arr
        raise ValueError(f"expected input shaped {want} or (batch, *{want}), got {arr.shape}")

    def prepare(self, dataset: LabeledDataset):
        """High-pass filter and length-fit a corpus into model inputs."""
        x, y, subjects, _ = _prepare_time_series(
            dataset, self.cfg.input_len, self.cfg.in_channels
        )
        return x, y, subjects

    def prepare_segment(self, segment) -> np.ndarray:
        """Model input for one recording; same math as :meth:`prepare`."""
        return _filter_fitted(segment, self.cfg.input_len, self.cfg.in_channels)


class Network2D(_SequentialNet):
    """Spectrogram classifier: 2x (Conv2D, ReLU, max-pool) + BN + dense head."""

    kind = "cnn2d"

    def __init__(self, cfg: Model2DConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        named: list[tuple[str, Layer]] = []
        c_in = cfg.in_channels
        for i, (c_out, kernel, pool) in enumerate(cfg.conv_specs, start=1):
            named.append((f"conv{i}", Conv2D(c_in, c_out, kernel, rng=rng)))
            named.append((f"relu{i}", ReLU()))
            named.append((f"pool{i}", MaxPool2D(pool)))
            c_in = c_out
        named.append(("flatten", Flatten()))
        named.append(("bn", BatchNorm(cfg.flatten_size)))
        named.append(("fc1", Dense(cfg.flatten_size, cfg.fc_width, rng=rng)))
        named.append(("relu_fc", ReLU()))
        named.append(("out", Dense(cfg.fc_width, 1, rng=rng)))
        super().__init__(named, "bn")

    def _validate(self, x):
        arr = np.asarray(x, dtype=np.float64)
        want = (self.cfg.in_channels, self.cfg.input_frames, self.cfg.input_bins)
        if arr.shape == want:
            return arr[None]
        if arr.ndim == 4 and arr.shape[1:] == want:
            return arr
        raise ValueError(f"expected input shaped {want} or (batch, *{want}), got {arr.shape}")

    def prepare(self, dataset: LabeledDataset):
        """Filter, length-fit, then stack per-channel magnitude spectrograms."""
        cfg = self.cfg
        filtered, y, subjects, fs = _prepare_time_series(
            dataset, cfg.input_len, cfg.in_channels
        )
        stacks = np.empty((len(y), cfg.in_channels, cfg.input_frames, cfg.input_bins))
        for i in range(len(y)):
            stacks[i] = self._stft_stack(filtered[i], fs)
        return stacks, y, subjects

    def prepare_segment(self, segment) -> np.ndarray:
        """Model input for one recording; same math as :meth:`prepare`."""
        filtered = _filter_fitted(segment, self.cfg.input_len, self.cfg.in_channels)
        return self._stft_stack(filtered, segment.sample_rate_hz)

    def _stft_stack(self, filtered: np.ndarray, fs: float) -> np.ndarray:
        from swallowmon.signal_model import SignalSegment

        spec = stft_spectrogram(
            SignalSegment(sample_rate_hz=fs, channels=filtered),
            window_len=self.cfg.stft_window,
            hop=self.cfg.stft_hop,
        )
        return spec.magnitudes


def build_network(cfg: ModelConfig) -> Network:
    """Fresh time-series classifier; identical cfg gives identical weights."""
    return Network(cfg)


def build_2d_network(cfg: Model2DConfig) -> Network2D:
    """Fresh spectrogram classifier; identical cfg gives identical weights."""
    return Network2D(cfg)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_FORMAT_VERSION = 1


def model_version(net: _SequentialNet) -> str:
    """Content hash of the configuration, parameters, and norm statistics."""
    h = hashlib.sha256()
    h.update(json.dumps(asdict(net.cfg), sort_keys=True).encode())
    for name, arr in net.parameter_items() + net.state_items():
        h.update(name.encode())
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_checkpoint(net: _SequentialNet, path: str | Path,
                    training_seed: int | None = None) -> None:
    """Write a self-contained JSON checkpoint (exact float64 round-trip)."""
    blob = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": net.kind,
        "config": asdict(net.cfg),
        "model_version": model_version(net),
        "training_seed": training_seed,
        "params": {name: arr.tolist() for name, arr in net.parameter_items()},
        "state": {name: arr.tolist() for name, arr in net.state_items()},
    }
    Path(path).write_text(json.dumps(blob))


def load_checkpoint(path: str | Path) -> Network | Network2D:
    """Rebuild a network from :func:`save_checkpoint` output."""
    blob = json.loads(Path(path).read_text())
    if blob.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {blob.get('format_version')}")
    kind = blob.get("kind")
    raw_cfg = dict(blob["config"])
    raw_cfg["conv_specs"] = tuple(tuple(s) for s in raw_cfg["conv_specs"])
    if kind == "cnn1d":
        net: Network | Network2D = Network(ModelConfig(**raw_cfg))
    elif kind == "cnn2d":
        net = Network2D(Model2DConfig(**raw_cfg))
    else:
        raise ValueError(f"unknown checkpoint kind: {kind!r}")
    stored = dict(blob["params"]) | dict(blob["state"])
    for name, arr in net.parameter_items() + net.state_items():
        if name not in stored:
            raise ValueError(f"checkpoint is missing array {name!r}")
        value = np.asarray(stored[name], dtype=np.float64)
        if value.shape != arr.shape:
            raise ValueError(f"checkpoint array {name!r} has shape {value.shape}, "
                             f"expected {arr.shape}")
        arr[...] = value
    if blob["model_version"] != model_version(net):
        raise ValueError("checkpoint hash mismatch: file was modified or truncated")
    return net
