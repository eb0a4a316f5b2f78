"""Seeded train/test splits and k-fold partitions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.model_selection import KFold, train_test_split

from ..exceptions import SplitError
from .ingest import AlignedDataset

MIN_SPLIT_ROWS = 10


@dataclass
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def split_indices(labels, spec: SplitSpec):
    """Sorted ``(train_idx, test_idx)``; the train side gets ``floor(n * fraction)`` rows."""
    labels = np.asarray(labels)
    n = len(labels)
    if n < MIN_SPLIT_ROWS:
        raise SplitError(f"need at least {MIN_SPLIT_ROWS} rows to split, got {n}")
    n_train = math.floor(n * spec.train_fraction)
    if n_train == 0 or n_train == n:
        raise SplitError(f"fraction {spec.train_fraction} leaves one side of {n} rows empty")
    idx = np.arange(n)
    try:
        train, test = train_test_split(
            idx,
            train_size=n_train,
            test_size=n - n_train,
            random_state=spec.seed,
            shuffle=True,
            stratify=labels if spec.stratified else None,
        )
    except ValueError as exc:
        raise SplitError(str(exc)) from exc
    if spec.stratified:
        for cls in np.unique(labels):
            if not (np.any(labels[train] == cls) and np.any(labels[test] == cls)):
                raise SplitError(f"class {cls} is missing from one side of the split")
    return np.sort(train), np.sort(test)


def split(dataset: AlignedDataset, spec: SplitSpec):
    train, test = split_indices(dataset.labels, spec)
    return dataset.subset(train), dataset.subset(test)


def kfold(dataset, k: int = 5, seed: int = 0):
    """Shuffled k-fold ``(train_idx, val_idx)`` pairs; ``dataset`` may be a row count."""
    n = dataset if isinstance(dataset, (int, np.integer)) else len(dataset)
    if k < 2:
        raise SplitError("k must be at least 2")
    if k > n:
        raise SplitError(f"k={k} exceeds the {n} available rows")
    folds = KFold(n_splits=k, shuffle=True, random_state=seed).split(np.arange(n))
    return [(np.sort(tr), np.sort(va)) for tr, va in folds]
