"""Differentiable layer primitives on plain numpy arrays.

Every layer caches what its backward pass needs during ``forward`` and
fills ``self.grads`` (keyed like ``self.params``) during ``backward``,
which returns the gradient with respect to the layer input.  All math is
float64; nothing here touches global random state.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits(z: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy straight from logits.

    Returns ``(loss, dloss/dz)``.  Computed as softplus(-z) + (1-y)*z via
    logaddexp, which is exact for moderate logits and never overflows.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    losses = np.logaddexp(0.0, -z) + (1.0 - y) * z
    grad = (sigmoid(z) - y) / z.shape[0]
    return float(np.mean(losses)), grad


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _fan_in_uniform(rng: np.random.Generator | None, shape: tuple[int, ...], fan_in: int):
    if rng is None:
        return np.zeros(shape)
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv1D(Layer):
    """Valid cross-correlation: (B, C_in, L) -> (B, C_out, L - k + 1)."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int,
                 rng: np.random.Generator | None = None):
        super().__init__()
        self.kernel = kernel
        self.params["w"] = _fan_in_uniform(
            rng, (out_channels, in_channels, kernel), in_channels * kernel
        )
        self.params["b"] = np.zeros(out_channels)
        self._x: np.ndarray | None = None

    def forward(self, x, train=False):
        self._x = x
        win = sliding_window_view(x, self.kernel, axis=2)
        return (
            np.einsum("bilk,oik->bol", win, self.params["w"], optimize=True)
            + self.params["b"][None, :, None]
        )

    def backward(self, grad):
        k = self.kernel
        win = sliding_window_view(self._x, k, axis=2)
        self.grads["w"] = np.einsum("bilk,bol->oik", win, grad, optimize=True)
        self.grads["b"] = grad.sum(axis=(0, 2))
        padded = np.pad(grad, ((0, 0), (0, 0), (k - 1, k - 1)))
        gwin = sliding_window_view(padded, k, axis=2)
        return np.einsum(
            "bolk,oik->bil", gwin, self.params["w"][:, :, ::-1], optimize=True
        )


class Conv2D(Layer):
    """Valid square cross-correlation: (B, C_in, H, W) -> (B, C_out, H', W')."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int,
                 rng: np.random.Generator | None = None):
        super().__init__()
        self.kernel = kernel
        self.params["w"] = _fan_in_uniform(
            rng, (out_channels, in_channels, kernel, kernel),
            in_channels * kernel * kernel,
        )
        self.params["b"] = np.zeros(out_channels)
        self._x: np.ndarray | None = None

    def forward(self, x, train=False):
        self._x = x
        win = sliding_window_view(x, (self.kernel, self.kernel), axis=(2, 3))
        return (
            np.einsum("bihwjk,oijk->bohw", win, self.params["w"], optimize=True)
            + self.params["b"][None, :, None, None]
        )

    def backward(self, grad):
        k = self.kernel
        win = sliding_window_view(self._x, (k, k), axis=(2, 3))
        self.grads["w"] = np.einsum("bihwjk,bohw->oijk", win, grad, optimize=True)
        self.grads["b"] = grad.sum(axis=(0, 2, 3))
        padded = np.pad(grad, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
        gwin = sliding_window_view(padded, (k, k), axis=(2, 3))
        return np.einsum(
            "bohwjk,oijk->bihw", gwin, self.params["w"][:, :, ::-1, ::-1], optimize=True
        )


class MaxPool1D(Layer):
    """Non-overlapping max pooling; a trailing remainder window is dropped."""

    def __init__(self, pool: int):
        super().__init__()
        self.pool = pool
        self._idx: np.ndarray | None = None
        self._in_shape: tuple[int, ...] | None = None

    def forward(self, x, train=False):
        b, c, n = x.shape
        m = n // self.pool
        self._in_shape = x.shape
        windows = x[:, :, : m * self.pool].reshape(b, c, m, self.pool)
        self._idx = windows.argmax(axis=3)
        return np.take_along_axis(windows, self._idx[..., None], axis=3)[..., 0]

    def backward(self, grad):
        b, c, n = self._in_shape
        m = n // self.pool
        scattered = np.zeros((b, c, m, self.pool))
        np.put_along_axis(scattered, self._idx[..., None], grad[..., None], axis=3)
        out = np.zeros(self._in_shape)
        out[:, :, : m * self.pool] = scattered.reshape(b, c, m * self.pool)
        return out


class MaxPool2D(Layer):
    """Non-overlapping square max pooling over the two trailing axes."""

    def __init__(self, pool: int):
        super().__init__()
        self.pool = pool
        self._idx: np.ndarray | None = None
        self._in_shape: tuple[int, ...] | None = None

    def _windows(self, x):
        p = self.pool
        b, c, h, w = x.shape
        m, n = h // p, w // p
        t = x[:, :, : m * p, : n * p].reshape(b, c, m, p, n, p)
        return t.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, m, n, p * p)

    def forward(self, x, train=False):
        self._in_shape = x.shape
        windows = self._windows(x)
        self._idx = windows.argmax(axis=4)
        return np.take_along_axis(windows, self._idx[..., None], axis=4)[..., 0]

    def backward(self, grad):
        p = self.pool
        b, c, h, w = self._in_shape
        m, n = h // p, w // p
        scattered = np.zeros((b, c, m, n, p * p))
        np.put_along_axis(scattered, self._idx[..., None], grad[..., None], axis=4)
        block = scattered.reshape(b, c, m, n, p, p).transpose(0, 1, 2, 4, 3, 5)
        out = np.zeros(self._in_shape)
        out[:, :, : m * p, : n * p] = block.reshape(b, c, m * p, n * p)
        return out


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask: np.ndarray | None = None

    def forward(self, x, train=False):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return np.where(self._mask, grad, 0.0)


class Flatten(Layer):
    def __init__(self):
        super().__init__()
        self._in_shape: tuple[int, ...] | None = None

    def forward(self, x, train=False):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._in_shape)


class BatchNorm(Layer):
    """Feature-wise normalization over the batch axis of a (B, F) input.

    Training mode normalizes by the biased batch statistics and, unless
    ``update_stats=False``, folds them into the running estimates with
    ``running <- decay * running + (1 - decay) * batch``.  Inference mode
    uses the running estimates only.
    """

    def __init__(self, n_features: int, decay: float = 0.9, eps: float = 1e-5):
        super().__init__()
        self.decay = decay
        self.eps = eps
        self.params["gamma"] = np.ones(n_features)
        self.params["beta"] = np.zeros(n_features)
        self.running_mean = np.zeros(n_features)
        self.running_var = np.ones(n_features)
        self._cache: tuple | None = None

    def forward(self, x, train=False, update_stats=None):
        if update_stats is None:
            update_stats = train
        if train:
            mu = x.mean(axis=0)
            var = x.var(axis=0)
            if update_stats:
                self.running_mean = self.decay * self.running_mean + (1 - self.decay) * mu
                self.running_var = self.decay * self.running_var + (1 - self.decay) * var
        else:
            mu = self.running_mean
            var = self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv
        self._cache = (train, x, mu, inv, xhat)
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, grad):
        train, x, mu, inv, xhat = self._cache
        self.grads["gamma"] = np.sum(grad * xhat, axis=0)
        self.grads["beta"] = np.sum(grad, axis=0)
        dxhat = grad * self.params["gamma"]
        if not train:
            return dxhat * inv
        b = x.shape[0]
        xc = x - mu
        dvar = np.sum(dxhat * xc, axis=0) * (-0.5) * inv**3
        dmu = -inv * dxhat.sum(axis=0) + dvar * (-2.0 / b) * xc.sum(axis=0)
        return dxhat * inv + dvar * (2.0 / b) * xc + dmu / b


class Dense(Layer):
    """Affine map: (B, n_in) @ w + b with w of shape (n_in, n_out)."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None):
        super().__init__()
        self.params["w"] = _fan_in_uniform(rng, (n_in, n_out), n_in)
        self.params["b"] = np.zeros(n_out)
        self._x: np.ndarray | None = None

    def forward(self, x, train=False):
        self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, grad):
        self.grads["w"] = self._x.T @ grad
        self.grads["b"] = grad.sum(axis=0)
        return grad @ self.params["w"].T
