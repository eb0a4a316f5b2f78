"""Loading per-modality CSV files and joining them on a shared key."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np
import pandas as pd

from ..exceptions import (
    AlignmentError,
    DimensionError,
    DuplicateKeyError,
    EmptyResultError,
    MissingModalityError,
    SchemaError,
)
from .schema import PHYSIO_DIM, PHYSIOLOGY, Manifest, ModalitySchema

logger = logging.getLogger(__name__)


@dataclass
class LoadReport:
    modality: str
    rows_read: int
    dropped: int

    @property
    def kept(self) -> int:
        return self.rows_read - self.dropped

    def to_dict(self) -> dict:
        return {
            "modality": self.modality,
            "rows_read": self.rows_read,
            "dropped": self.dropped,
            "kept": self.kept,
        }


@dataclass
class ModalityFrame:
    schema: ModalitySchema
    keys: np.ndarray  # str keys, unique
    features: np.ndarray  # (n, len(feature_columns)), finite
    labels: Optional[np.ndarray] = None
    tlx: Optional[np.ndarray] = None
    report: Optional[LoadReport] = None

    def __post_init__(self):
        self.keys = np.asarray(self.keys, dtype=object)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.shape != (len(self.keys), len(self.schema.feature_columns)):
            raise DimensionError(f"{self.schema.modality}: feature block shape {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise SchemaError(f"{self.schema.modality}: non-finite features")
        if len(set(self.keys)) != len(self.keys):
            raise DuplicateKeyError(f"{self.schema.modality}: duplicate keys")

    @property
    def modality(self) -> str:
        return self.schema.modality

    def __len__(self):
        return len(self.keys)


def load_modality(path, schema: ModalitySchema) -> ModalityFrame:
    """Read one modality file, dropping (and counting) rows with unusable cells."""
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in schema.required_columns if c not in raw.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {missing}")

    keys = raw[schema.key_column].str.strip()
    numeric = raw[schema.feature_columns].apply(pd.to_numeric, errors="coerce").to_numpy(float)
    ok = np.isfinite(numeric).all(axis=1) & (keys != "").to_numpy()

    labels = tlx = None
    if schema.label_column:
        labels = pd.to_numeric(raw[schema.label_column], errors="coerce").to_numpy(float)
        ok &= np.isfinite(labels)
        bad = ok & ~np.isin(labels, (0.0, 1.0))
        if bad.any():
            raise SchemaError(f"{path}: label column {schema.label_column!r} has non-binary values")
    if schema.tlx_column:
        tlx = pd.to_numeric(raw[schema.tlx_column], errors="coerce").to_numpy(float)
        ok &= np.isfinite(tlx)
        bad = ok & ((tlx < 0) | (tlx > 100))
        if bad.any():
            raise SchemaError(f"{path}: tlx column {schema.tlx_column!r} outside [0, 100]")

    kept_keys = keys.to_numpy(dtype=object)[ok]
    if len(set(kept_keys)) != len(kept_keys):
        dupes = pd.Series(kept_keys).loc[lambda s: s.duplicated()].unique()[:5]
        raise DuplicateKeyError(f"{path}: duplicate keys, e.g. {list(dupes)}")
    if not ok.any():
        raise EmptyResultError(f"{path}: no usable rows")

    report = LoadReport(schema.modality, len(raw), int((~ok).sum()))
    if report.dropped:
        logger.info("%s: dropped %d of %d rows", schema.modality, report.dropped, report.rows_read)
    return ModalityFrame(
        schema,
        kept_keys,
        numeric[ok],
        None if labels is None else labels[ok].astype(int),
        None if tlx is None else tlx[ok],
        report,
    )


def load_manifest_frames(manifest: Manifest, modalities=None) -> Dict[str, ModalityFrame]:
    frames = {}
    for name in modalities or manifest.schemas:
        if name not in manifest.schemas:
            raise MissingModalityError(f"manifest has no {name!r} modality")
        try:
            frames[name] = load_modality(manifest.path_for(name), manifest.schemas[name])
        except FileNotFoundError:
            raise MissingModalityError(
                f"{name} file not found: {manifest.path_for(name)}"
            ) from None
    return frames


def _sort_keys(keys):
    try:
        order = np.argsort(np.array([float(k) for k in keys]), kind="stable")
    except ValueError:
        order = np.argsort(np.array(keys, dtype=str), kind="stable")
    return [keys[i] for i in order]


@dataclass
class AlignedDataset:
    keys: np.ndarray
    blocks: Dict[str, np.ndarray]
    labels: np.ndarray
    tlx: Optional[np.ndarray] = None
    normalization_stats: Optional[dict] = None

    def __post_init__(self):
        self.keys = np.asarray(self.keys, dtype=object)
        self.labels = np.asarray(self.labels, dtype=int)
        n = len(self.keys)
        for name, block in self.blocks.items():
            block = np.asarray(block, dtype=float)
            if block.ndim != 2 or block.shape[0] != n:
                raise DimensionError(f"block {name!r} has shape {block.shape}, expected {n} rows")
            if not np.all(np.isfinite(block)):
                raise SchemaError(f"block {name!r} has non-finite values")
            self.blocks[name] = block
        if PHYSIOLOGY in self.blocks and self.blocks[PHYSIOLOGY].shape[1] != PHYSIO_DIM:
            raise DimensionError(
                f"physiology block must have width {PHYSIO_DIM}, got {self.blocks[PHYSIOLOGY].shape[1]}"
            )
        if self.labels.shape != (n,) or not np.all((self.labels == 0) | (self.labels == 1)):
            raise SchemaError("labels must be a binary vector with one entry per row")
        if self.tlx is not None:
            self.tlx = np.asarray(self.tlx, dtype=float)
            if self.tlx.shape != (n,) or np.any((self.tlx < 0) | (self.tlx > 100)):
                raise SchemaError("tlx targets must lie in [0, 100], one per row")

    def __len__(self):
        return len(self.keys)

    @property
    def n_rows(self) -> int:
        return len(self.keys)

    @property
    def X(self) -> Dict[str, np.ndarray]:
        """The modality blocks, in the mapping form fusion estimators accept."""
        return dict(self.blocks)

    def subset(self, idx) -> "AlignedDataset":
        idx = np.asarray(idx, dtype=int)
        return AlignedDataset(
            self.keys[idx],
            {k: v[idx] for k, v in self.blocks.items()},
            self.labels[idx],
            None if self.tlx is None else self.tlx[idx],
            self.normalization_stats,
        )

    def timestamps(self) -> np.ndarray:
        try:
            return np.array([float(k) for k in self.keys])
        except ValueError:
            raise SchemaError("keys are not numeric timestamps") from None


@dataclass
class AlignmentReport:
    rows_per_modality: Dict[str, int]
    aligned: int
    excluded: Dict[str, int] = field(default_factory=dict)
    load: Dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows_per_modality": self.rows_per_modality,
            "aligned": self.aligned,
            "excluded": self.excluded,
            "load": self.load,
        }


def _source_lookup(source, frames, attr):
    if source is None:
        return None
    if isinstance(source, str):
        frame = frames.get(source)
        if frame is None or getattr(frame, attr) is None:
            raise SchemaError(f"{source!r} frame carries no {attr}")
        return dict(zip(frame.keys, getattr(frame, attr)))
    return {str(k): v for k, v in dict(source).items()}


def align(frames, labels_source, tlx_source=None):
    """Inner-join frames on key. Returns ``(AlignedDataset, AlignmentReport)``.

    ``labels_source``/``tlx_source`` name a modality whose frame carries the
    column, or give an explicit key -> value mapping.
    """
    if not isinstance(frames, Mapping):
        frames = {f.modality: f for f in frames}
    if len(frames) < 2:
        raise AlignmentError("need at least two modality frames to align")
    label_map = _source_lookup(labels_source, frames, "labels")
    tlx_map = _source_lookup(tlx_source, frames, "tlx")

    common = set.intersection(*(set(f.keys) for f in frames.values()))
    common &= set(label_map)
    if tlx_map is not None:
        common &= set(tlx_map)
    if not common:
        raise AlignmentError("no key is reported by every modality")
    keys = _sort_keys(list(common))

    blocks = {}
    for name, frame in frames.items():
        pos = {k: i for i, k in enumerate(frame.keys)}
        blocks[name] = frame.features[[pos[k] for k in keys]]
    labels = np.array([label_map[k] for k in keys], dtype=int)
    tlx = None if tlx_map is None else np.array([tlx_map[k] for k in keys], dtype=float)

    report = AlignmentReport(
        rows_per_modality={n: len(f) for n, f in frames.items()},
        aligned=len(keys),
        excluded={n: len(f) - len(keys) for n, f in frames.items()},
        load={n: f.report.to_dict() for n, f in frames.items() if f.report is not None},
    )
    return AlignedDataset(np.array(keys, dtype=object), blocks, labels, tlx), report


def load_dataset(manifest: Manifest, modalities=None):
    """Load every modality in ``manifest`` and align them."""
    frames = load_manifest_frames(manifest, modalities)
    return align(frames, manifest.labels_source, manifest.tlx_source)
