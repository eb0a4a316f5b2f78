"""NASA-TLX workload regression on top of the frozen early-fusion feature map."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import SchemaError
from ..nn.estimators import DenseNetRegressor
from .encoders import TLX_HIDDEN
from .models import EarlyFusionClassifier, _record_to_batch

TLX_MAX = 100.0
# inverted dropout at 0.5 shrinks a regression head toward the mean
TLX_DROPOUT = 0.1


class TlxRegressor(RegressorMixin, BaseEstimator):
    """Two-hidden-layer regression head reading the same features as the
    early-fusion classifier. Targets are 0-100 TLX scores; training happens on
    ``target / 100`` when ``target_scale='normalized_0_1'``."""

    def __init__(
        self,
        encoders=None,
        hidden_dims=TLX_HIDDEN,
        dropout_rate=TLX_DROPOUT,
        epochs=200,
        learning_rate=0.01,
        batch_size=32,
        shuffle=True,
        random_state=0,
        target_scale="normalized_0_1",
    ):
        self.encoders = encoders
        self.hidden_dims = hidden_dims
        self.dropout_rate = dropout_rate
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.shuffle = shuffle
        self.random_state = random_state
        self.target_scale = target_scale

    @property
    def _divisor(self):
        if self.target_scale == "normalized_0_1":
            return TLX_MAX
        if self.target_scale == "raw_0_100":
            return 1.0
        raise ValueError(f"unknown target_scale {self.target_scale!r}")

    def features(self, X):
        return EarlyFusionClassifier(encoders=self.encoders).fused_features(X)

    def fit(self, X, y):
        if y is None:
            raise SchemaError("TLX regression needs tlx targets")
        y = np.asarray(y, dtype=float)
        if np.any((y < 0) | (y > TLX_MAX)) or not np.all(np.isfinite(y)):
            raise SchemaError("tlx targets must lie in [0, 100]")
        F = self.features(X)
        self.head_ = DenseNetRegressor(
            hidden_dims=self.hidden_dims,
            dropout_rate=self.dropout_rate,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            shuffle=self.shuffle,
            random_state=self.random_state,
            target_range=(0.0, TLX_MAX / self._divisor),
        ).fit(F, y / self._divisor)
        self.history_ = self.head_.history_
        self.n_features_in_ = F.shape[1]
        return self

    def predict_scaled(self, X):
        """Clamped predictions on the training scale (0-1 when normalized)."""
        check_is_fitted(self, "head_")
        return self.head_.predict(self.features(X))

    def predict(self, X):
        """Clamped predictions on the 0-100 TLX scale."""
        return self.predict_scaled(X) * self._divisor


def train_tlx_regressor(early_model: EarlyFusionClassifier, X, tlx, **params) -> TlxRegressor:
    """Share ``early_model``'s encoders and fit only a new regression head."""
    if tlx is None:
        raise SchemaError("dataset has no tlx targets")
    return TlxRegressor(encoders=early_model.encoders, **params).fit(X, tlx)


def predict_tlx(regressor: TlxRegressor, record) -> float:
    return float(regressor.predict(_record_to_batch(record))[0])
