"""scikit-learn compatible wrappers around :class:`DenseNet`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import DimensionError
from .core import DenseNet, LossKind, TrainConfig, forward, init_net, train


def spawn_seeds(random_state, n):
    """Independent integer seeds derived from one integer seed."""
    ss = np.random.SeedSequence(0 if random_state is None else int(random_state))
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in ss.spawn(n)]


def build_net(input_dim, hidden_dims, output_activation, dropout_rate, rng) -> DenseNet:
    """ReLU + dropout hidden stack followed by a single-unit output layer."""
    hidden_dims = list(hidden_dims)
    if not hidden_dims:
        raise DimensionError("hidden_dims must not be empty")
    if input_dim < 1 or any(int(h) < 1 for h in hidden_dims):
        raise DimensionError(f"zero-width layer: input {input_dim}, hidden {hidden_dims}")
    dims = [int(input_dim)] + [int(h) for h in hidden_dims] + [1]
    acts = ["relu"] * len(hidden_dims) + [output_activation]
    rates = [float(dropout_rate)] * len(hidden_dims) + [0.0]
    return init_net(dims, acts, rates, rng)


class _DenseNetEstimator(BaseEstimator):
    _output_activation = "sigmoid"
    _loss = LossKind.BCE

    def __init__(
        self,
        hidden_dims=(16,),
        dropout_rate=0.5,
        epochs=200,
        learning_rate=0.01,
        batch_size=32,
        shuffle=True,
        random_state=0,
    ):
        self.hidden_dims = hidden_dims
        self.dropout_rate = dropout_rate
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.shuffle = shuffle
        self.random_state = random_state

    def _train_config(self, seed):
        return TrainConfig(
            epochs=int(self.epochs),
            learning_rate=float(self.learning_rate),
            batch_size=int(self.batch_size),
            seed=seed,
            shuffle=bool(self.shuffle),
        )

    def _fit_net(self, X, y):
        init_seed, train_seed = spawn_seeds(self.random_state, 2)
        cfg = self._train_config(train_seed)
        self.net_ = build_net(
            X.shape[1],
            self.hidden_dims,
            self._output_activation,
            self.dropout_rate,
            np.random.default_rng(init_seed),
        )
        self.history_ = train(self.net_, X, y, cfg, self._loss)
        self.n_features_in_ = X.shape[1]
        return self

    def _raw_output(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.net_.input_dim:
            raise DimensionError(f"expected {self.net_.input_dim} features, got {X.shape[1]}")
        out, _ = forward(self.net_, X, "infer")
        return out[:, 0]

    def transform(self, X):
        """Last-hidden-layer activations in inference mode (output unit excluded)."""
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.net_.input_dim:
            raise DimensionError(f"expected {self.net_.input_dim} features, got {X.shape[1]}")
        feats, _ = forward(self.net_.truncated(len(self.net_.layers) - 1), X, "infer")
        return feats

    @property
    def feature_dim(self) -> int:
        if hasattr(self, "net_"):
            net = self.net_
            return net.layers[-2].n_out if len(net.layers) > 1 else net.input_dim
        return int(list(self.hidden_dims)[-1])

    @classmethod
    def from_net(cls, net: DenseNet, **params):
        """Wrap an already-trained network (e.g. one loaded from disk)."""
        est = cls(**params)
        est.net_ = net
        est.n_features_in_ = net.input_dim
        est.history_ = []
        return est


class DenseNetClassifier(ClassifierMixin, _DenseNetEstimator):
    """Binary classifier: ReLU hidden layers with dropout, sigmoid output, BCE loss.

    ``transform`` exposes the last hidden layer so a fitted classifier doubles
    as a feature encoder.
    """

    def __init__(
        self,
        hidden_dims=(16,),
        dropout_rate=0.5,
        epochs=200,
        learning_rate=0.01,
        batch_size=32,
        shuffle=True,
        random_state=0,
        threshold=0.5,
    ):
        super().__init__(
            hidden_dims=hidden_dims,
            dropout_rate=dropout_rate,
            epochs=epochs,
            learning_rate=learning_rate,
            batch_size=batch_size,
            shuffle=shuffle,
            random_state=random_state,
        )
        self.threshold = threshold

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        self.classes_ = np.array([0, 1])
        return self._fit_net(X, y)

    @classmethod
    def from_net(cls, net, **params):
        est = super().from_net(net, **params)
        est.classes_ = np.array([0, 1])
        return est

    def predict_proba(self, X):
        p = self._raw_output(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self._raw_output(X) >= self.threshold).astype(int)


class DenseNetRegressor(RegressorMixin, _DenseNetEstimator):
    """Regressor with identity output trained on MSE; predictions clipped to ``target_range``."""

    _output_activation = "identity"
    _loss = LossKind.RMSE

    def __init__(
        self,
        hidden_dims=(32, 16),
        dropout_rate=0.5,
        epochs=200,
        learning_rate=0.01,
        batch_size=32,
        shuffle=True,
        random_state=0,
        target_range=(0.0, 1.0),
    ):
        super().__init__(
            hidden_dims=hidden_dims,
            dropout_rate=dropout_rate,
            epochs=epochs,
            learning_rate=learning_rate,
            batch_size=batch_size,
            shuffle=shuffle,
            random_state=random_state,
        )
        self.target_range = target_range

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        return self._fit_net(X, y)

    def predict_raw(self, X):
        return self._raw_output(X)

    def predict(self, X):
        raw = self._raw_output(X)
        if self.target_range is None:
            return raw
        lo, hi = self.target_range
        return np.clip(raw, lo, hi)
