"""Train-only z-score normalization."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..exceptions import DimensionError
from .ingest import AlignedDataset

# relative std below which a column counts as constant
_ZERO_VAR_TOL = 1e-12


class ZScoreNormalizer(TransformerMixin, BaseEstimator):
    """Per-column z-score. Zero-variance columns map to exactly 0."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.constant_ = std <= _ZERO_VAR_TOL * np.maximum(1.0, np.abs(self.mean_))
        self.scale_ = np.where(self.constant_, 1.0, std)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DimensionError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        out = (X - self.mean_) / self.scale_
        out[:, self.constant_] = 0.0
        return out

    def get_stats(self) -> dict:
        return {"mean": self.mean_.tolist(), "scale": self.scale_.tolist(),
                "constant": self.constant_.tolist()}

    @classmethod
    def from_stats(cls, stats: dict) -> "ZScoreNormalizer":
        est = cls()
        est.mean_ = np.asarray(stats["mean"], dtype=float)
        est.scale_ = np.asarray(stats["scale"], dtype=float)
        est.constant_ = np.asarray(stats["constant"], dtype=bool)
        est.n_features_in_ = len(est.mean_)
        return est


def normalize(dataset: AlignedDataset, fit_rows) -> AlignedDataset:
    """Z-score every block with statistics from ``fit_rows`` only."""
    fit_rows = np.asarray(fit_rows, dtype=int)
    if fit_rows.size == 0:
        raise ValueError("fit_rows must not be empty")
    stats = {}
    for name, block in dataset.blocks.items():
        stats[name] = ZScoreNormalizer().fit(block[fit_rows]).get_stats()
    return apply_normalization(dataset, stats)


def apply_normalization(dataset: AlignedDataset, stats: dict) -> AlignedDataset:
    """Apply previously stored statistics (e.g. from a model bundle)."""
    blocks = {}
    for name, block in dataset.blocks.items():
        if name not in stats:
            raise KeyError(f"no normalization statistics for {name!r}")
        blocks[name] = ZScoreNormalizer.from_stats(stats[name]).transform(block)
    return AlignedDataset(dataset.keys, blocks, dataset.labels, dataset.tlx, stats)
