"""Dense feed-forward networks with exact backpropagation.

Everything here works on float64 numpy arrays. A batch is a 2-D array of
shape ``(n_samples, n_features)``; 1-D inputs are treated as a single sample
and returned 1-D.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import expit

from ..exceptions import (
    DimensionError,
    DivergenceError,
    NumericInputError,
    StaleTraceError,
)

BCE_EPS = 1e-7
ACTIVATIONS = ("relu", "sigmoid", "identity")


class LossKind(str, enum.Enum):
    BCE = "bce"
    # trained on mean squared error, reported as its square root
    RMSE = "mse_for_rmse"

    @classmethod
    def coerce(cls, value) -> "LossKind":
        if isinstance(value, cls):
            return value
        if value == "rmse" or value == "mse":
            return cls.RMSE
        return cls(value)


def _check_finite(x, what="input"):
    if not np.all(np.isfinite(x)):
        raise NumericInputError(f"{what} contains non-finite values")


def activate(kind: str, x):
    x = np.asarray(x, dtype=float)
    _check_finite(x)
    if kind == "sigmoid":
        return expit(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "identity":
        return x.copy()
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(kind: str, z, a):
    """Derivative of the activation at pre-activation ``z`` (``a`` = output)."""
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "relu":
        return (z > 0).astype(float)
    return np.ones_like(z)


def loss(kind, predictions, targets) -> float:
    """Binary cross-entropy, or RMSE for the regression kind."""
    kind = LossKind.coerce(kind)
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise DimensionError(f"prediction shape {p.shape} != target shape {t.shape}")
    if p.size == 0:
        raise DimensionError("loss needs at least one value")
    if kind is LossKind.BCE:
        if not np.all((t == 0) | (t == 1)):
            raise ValueError("binary cross-entropy targets must be 0 or 1")
        p = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
        return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))
    return float(np.sqrt(np.mean((p - t) ** 2)))


def objective(kind, predictions, targets) -> float:
    """The quantity that backward() differentiates: BCE, or plain MSE."""
    kind = LossKind.coerce(kind)
    if kind is LossKind.BCE:
        return loss(kind, predictions, targets)
    return loss(kind, predictions, targets) ** 2


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str = "relu"
    dropout_rate: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise DimensionError("weights must be 2-D and biases 1-D")
        if self.biases.shape[0] != self.weights.shape[0]:
            raise DimensionError(
                f"bias length {self.biases.shape[0]} != weight rows {self.weights.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        _check_finite(self.weights, "weights")
        _check_finite(self.biases, "biases")

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class DenseNet:
    layers: List[DenseLayer]
    input_dim: int = field(default=None)

    def __post_init__(self):
        if not self.layers:
            raise DimensionError("a network needs at least one layer")
        if self.input_dim is None:
            self.input_dim = self.layers[0].n_in
        prev = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.n_in != prev:
                raise DimensionError(f"layer {i} expects {layer.n_in} inputs, gets {prev}")
            prev = layer.n_out

    @property
    def output_dim(self) -> int:
        return self.layers[-1].n_out

    @property
    def dims(self) -> List[int]:
        return [self.input_dim] + [layer.n_out for layer in self.layers]

    def copy(self) -> "DenseNet":
        return DenseNet(
            [
                DenseLayer(l.weights.copy(), l.biases.copy(), l.activation, l.dropout_rate)
                for l in self.layers
            ],
            self.input_dim,
        )

    def truncated(self, n_layers: int) -> "DenseNet":
        """View of the first ``n_layers`` layers (parameters shared, not copied)."""
        return DenseNet(self.layers[:n_layers], self.input_dim)


def init_net(
    dims: Sequence[int],
    activations: Sequence[str],
    dropout_rates: Sequence[float],
    rng: np.random.Generator,
) -> DenseNet:
    """Glorot-uniform weights, zero biases."""
    if len(dims) < 2:
        raise DimensionError("need input and output dims")
    if any(d < 1 for d in dims):
        raise DimensionError(f"zero-width layer in dims {list(dims)}")
    layers = []
    for fan_in, fan_out, act, rate in zip(dims[:-1], dims[1:], activations, dropout_rates):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(DenseLayer(w, np.zeros(fan_out), act, rate))
    return DenseNet(layers, dims[0])


@dataclass
class LayerTrace:
    inputs: np.ndarray  # what the layer consumed (after the previous layer's dropout)
    z: np.ndarray
    a: np.ndarray  # activation before dropout
    mask: Optional[np.ndarray]  # scaled keep-mask, None when dropout inactive


def _as_batch(x, input_dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise DimensionError(f"expected {input_dim} input features, got shape {np.shape(x)}")
    _check_finite(x)
    return x, single


def forward(net: DenseNet, x, mode: str = "infer", rng: Optional[np.random.Generator] = None):
    """Run the network; returns ``(output, trace)``.

    In ``"train"`` mode each layer with a nonzero dropout rate draws a keep-mask
    from ``rng`` (one ``rng.random`` call per such layer, in layer order) and
    scales survivors by ``1 / (1 - rate)``.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    a, single = _as_batch(x, net.input_dim)
    if mode == "train" and rng is None:
        raise ValueError("train mode needs an rng")
    trace = []
    for layer in net.layers:
        z = a @ layer.weights.T + layer.biases
        act = activate(layer.activation, z)
        mask = None
        if mode == "train" and layer.dropout_rate > 0.0:
            keep = rng.random(act.shape) >= layer.dropout_rate
            mask = keep / (1.0 - layer.dropout_rate)
        trace.append(LayerTrace(a, z, act, mask))
        a = act * mask if mask is not None else act
    out = a[0] if single else a
    return out, trace


def backward(net: DenseNet, trace: List[LayerTrace], target, loss_kind) -> List[tuple]:
    """Gradients of the mean objective w.r.t. each layer's ``(weights, biases)``."""
    kind = LossKind.coerce(loss_kind)
    if len(trace) != len(net.layers):
        raise StaleTraceError("trace length does not match the network")
    for layer, t in zip(net.layers, trace):
        if t.inputs.shape[1] != layer.n_in or t.z.shape[1] != layer.n_out:
            raise StaleTraceError("trace shapes do not match the network")
    last = trace[-1]
    y_hat = last.a if last.mask is None else last.a * last.mask
    y = np.asarray(target, dtype=float).reshape(y_hat.shape)
    n = y_hat.size

    out_layer = net.layers[-1]
    if kind is LossKind.BCE:
        if out_layer.activation == "sigmoid" and last.mask is None:
            delta = (y_hat - y) / n
        else:
            p = np.clip(y_hat, BCE_EPS, 1.0 - BCE_EPS)
            d_out = (p - y) / (p * (1.0 - p)) / n
            if last.mask is not None:
                d_out = d_out * last.mask
            delta = d_out * activation_grad(out_layer.activation, last.z, last.a)
    else:
        d_out = 2.0 * (y_hat - y) / n
        if last.mask is not None:
            d_out = d_out * last.mask
        delta = d_out * activation_grad(out_layer.activation, last.z, last.a)

    grads = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        t = trace[k]
        grads[k] = (delta.T @ t.inputs, delta.sum(axis=0))
        if k == 0:
            break
        prev = trace[k - 1]
        d_a = delta @ net.layers[k].weights
        if prev.mask is not None:
            d_a = d_a * prev.mask
        delta = d_a * activation_grad(net.layers[k - 1].activation, prev.z, prev.a)
    return grads


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int = 32
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ValueError("epochs must be >= 1")
        if int(self.batch_size) < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")


def train(net: DenseNet, inputs, targets, cfg: TrainConfig, loss_kind) -> List[float]:
    """Mini-batch SGD, in place. Returns the full-training-set loss after each epoch."""
    kind = LossKind.coerce(loss_kind)
    x, _ = _as_batch(inputs, net.input_dim)
    y = np.asarray(targets, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape != (x.shape[0], net.output_dim):
        raise DimensionError(f"targets shape {y.shape} does not fit {x.shape[0]} rows")
    if kind is LossKind.BCE and not np.all((y == 0) | (y == 1)):
        raise ValueError("binary cross-entropy targets must be 0 or 1")

    rng = np.random.default_rng(cfg.seed)
    n = x.shape[0]
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                for start in range(0, n, cfg.batch_size):
                    idx = order[start:start + cfg.batch_size]
                    _, trace = forward(net, x[idx], "train", rng)
                    for layer, (dw, db) in zip(net.layers, backward(net, trace, y[idx], kind)):
                        layer.weights -= cfg.learning_rate * dw
                        layer.biases -= cfg.learning_rate * db
                pred, _ = forward(net, x, "infer")
        except NumericInputError:
            raise DivergenceError(epoch, float("nan")) from None
        with np.errstate(over="ignore", invalid="ignore"):
            value = loss(kind, pred, y)
        if not np.isfinite(value):
            raise DivergenceError(epoch, value)
        history.append(value)
    return history
