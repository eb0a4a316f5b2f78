"""Early- and late-fusion stress classifiers.

Both take already-trained per-modality encoders and train only a small fusion
head on top; the encoders are never modified. ``X`` is a mapping from
modality name to a 2-D block (an :class:`AlignedDataset` works too) and must
include the raw ``physiology`` block, which bypasses the encoders.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..data.schema import PHYSIO_DIM, PHYSIOLOGY
from ..exceptions import DimensionError
from ..nn.estimators import DenseNetClassifier
from .encoders import FUSION_HIDDEN, encoder_feature_map, get_block, ordered_modalities


def physiology_block(X):
    block = get_block(X, PHYSIOLOGY)
    if block.ndim != 2 or block.shape[1] != PHYSIO_DIM:
        raise DimensionError(f"physiology block must have {PHYSIO_DIM} columns, got shape {block.shape}")
    return block


class _FusionClassifier(ClassifierMixin, BaseEstimator):
    mode = None

    def __init__(
        self,
        encoders=None,
        hidden_dims=FUSION_HIDDEN,
        dropout_rate=0.5,
        epochs=200,
        learning_rate=0.01,
        batch_size=32,
        shuffle=True,
        random_state=0,
        threshold=0.5,
    ):
        self.encoders = encoders
        self.hidden_dims = hidden_dims
        self.dropout_rate = dropout_rate
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.shuffle = shuffle
        self.random_state = random_state
        self.threshold = threshold

    @property
    def modalities(self):
        return ordered_modalities(self.encoders)

    def _check_encoders(self):
        if not self.encoders:
            raise ValueError("fusion needs at least one trained encoder")
        for name, enc in self.encoders.items():
            check_is_fitted(enc)

    def fused_features(self, X) -> np.ndarray:
        raise NotImplementedError

    @property
    def fusion_input_dim(self) -> int:
        raise NotImplementedError

    def _make_head(self):
        return DenseNetClassifier(
            hidden_dims=self.hidden_dims,
            dropout_rate=self.dropout_rate,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            shuffle=self.shuffle,
            random_state=self.random_state,
            threshold=self.threshold,
        )

    def fit(self, X, y):
        self._check_encoders()
        features = self.fused_features(X)
        self.head_ = self._make_head().fit(features, y)
        self.classes_ = self.head_.classes_
        self.history_ = self.head_.history_
        self.n_features_in_ = features.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "head_")
        return self.head_.predict_proba(self.fused_features(X))

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= self.threshold).astype(int)


class EarlyFusionClassifier(_FusionClassifier):
    """Fusion head over concatenated encoder feature maps plus raw physiology."""

    mode = "early"

    def fused_features(self, X):
        self._check_encoders()
        return np.hstack([encoder_feature_map(self.encoders, X), physiology_block(X)])

    @property
    def fusion_input_dim(self) -> int:
        return sum(enc.feature_dim for enc in self.encoders.values()) + PHYSIO_DIM


class LateFusionClassifier(_FusionClassifier):
    """Fusion head over each encoder's stress probability plus raw physiology."""

    mode = "late"

    def fused_features(self, X):
        self._check_encoders()
        probs = []
        for m in self.modalities:
            p = np.asarray(self.encoders[m].predict_proba(get_block(X, m)), dtype=float)
            p = p[:, 1] if p.ndim == 2 else p
            if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
                raise ValueError(f"{m} encoder produced probabilities outside [0, 1]")
            probs.append(p)
        return np.column_stack(probs + [physiology_block(X)])

    @property
    def fusion_input_dim(self) -> int:
        return len(self.encoders) + PHYSIO_DIM


def _record_to_batch(record):
    blocks = getattr(record, "blocks", record)
    return {k: np.atleast_2d(np.asarray(v, dtype=float)) for k, v in blocks.items() if v is not None}


def predict_stress(model: _FusionClassifier, record):
    """``(probability, label)`` for one record (modality name -> 1-D vector)."""
    proba = float(model.predict_proba(_record_to_batch(record))[0, 1])
    return proba, int(proba >= model.threshold)
