"""End-to-end training recipe and bundle evaluation, shared by the CLI commands."""

from __future__ import annotations

import logging
import zlib
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .data.ingest import AlignedDataset
from .data.preprocessing import apply_normalization, normalize
from .data.schema import ENCODED_MODALITIES
from .fusion.bundle import ModelBundle
from .fusion.encoders import DEFAULT_ENCODER_SPECS, EncoderSpec, make_encoder, train_unimodal
from .fusion.models import EarlyFusionClassifier, LateFusionClassifier
from .fusion.tlx import TlxRegressor
from .metrics import confusion, regression_report, report, roc
from .exceptions import UndefinedROCError

logger = logging.getLogger(__name__)

MODES = ("early", "late")


class StageError(Exception):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def derive_seed(seed: int, name: str) -> int:
    """Stable per-component seed so every component's randomness comes from one seed."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class Recipe:
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int = 32
    seed: int = 0
    modes: Tuple[str, ...] = MODES
    with_tlx: bool = False
    encoder_specs: Dict[str, EncoderSpec] = field(default_factory=lambda: dict(DEFAULT_ENCODER_SPECS))

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ValueError("epochs must be >= 1")
        if int(self.batch_size) < 1:
            raise ValueError("batch must be >= 1")
        if not float(self.learning_rate) > 0:
            raise ValueError("lr must be > 0")
        self.modes = tuple(self.modes)
        bad = set(self.modes) - set(MODES)
        if bad or not self.modes:
            raise ValueError(f"modes must be drawn from {MODES}, got {self.modes}")

    def train_params(self, name):
        return dict(
            epochs=int(self.epochs),
            learning_rate=float(self.learning_rate),
            batch_size=int(self.batch_size),
            random_state=derive_seed(self.seed, name),
        )

    def to_dict(self):
        d = asdict(self)
        d["modes"] = list(self.modes)
        d["encoder_specs"] = {
            k: {"hidden_dims": list(s.hidden_dims), "dropout_rate": s.dropout_rate}
            for k, s in self.encoder_specs.items()
        }
        return d


def fit_recipe(dataset: AlignedDataset, train_idx, recipe: Recipe):
    """Normalize on the training rows, then train encoders, fusion heads and
    (optionally) the TLX regressor. Returns ``(bundle, normalized_dataset)``."""
    with stage("normalize"):
        data = normalize(dataset, train_idx)
        train = data.subset(train_idx)

    encoders, unimodal_history = {}, {}
    with stage("unimodal"):
        for name in ENCODED_MODALITIES:
            spec = recipe.encoder_specs[name]
            enc = make_encoder(spec, **recipe.train_params(name))
            result = train_unimodal(enc, train.blocks[name], train.labels)
            encoders[name] = result.encoder
            logger.info("%s encoder trained, final loss %.4f", name, result.history[-1])

    models = {}
    with stage("fusion"):
        for mode in recipe.modes:
            cls = EarlyFusionClassifier if mode == "early" else LateFusionClassifier
            models[mode] = cls(encoders=encoders, **recipe.train_params(f"head-{mode}")).fit(
                train.X, train.labels
            )
            logger.info("%s fusion head trained, final loss %.4f", mode, models[mode].history_[-1])

    tlx = None
    if recipe.with_tlx:
        with stage("tlx"):
            if train.tlx is None:
                raise ValueError("--with-tlx given but the dataset has no tlx targets")
            tlx = TlxRegressor(encoders=encoders, **recipe.train_params("tlx")).fit(train.X, train.tlx)

    bundle = ModelBundle(
        encoders=encoders,
        models=models,
        tlx=tlx,
        normalization_stats=data.normalization_stats,
        config=recipe.to_dict(),
    )
    return bundle, data


def training_history(bundle: ModelBundle) -> Dict[str, list]:
    hist = {name: list(enc.history_) for name, enc in bundle.encoders.items()}
    hist.update({mode: list(m.history_) for mode, m in bundle.models.items()})
    if bundle.tlx is not None:
        hist["tlx"] = list(bundle.tlx.history_)
    return hist


def classification_block(proba, labels, threshold=0.5) -> dict:
    preds = (np.asarray(proba) >= threshold).astype(int)
    cm = confusion(preds, labels)
    out = {"n": int(len(labels)), "confusion": cm.to_dict(), "metrics": report(cm).to_dict()}
    try:
        curve = roc(proba, labels)
        out["roc"] = curve.to_dict()
        out["auc"] = curve.auc
    except UndefinedROCError:
        out["roc"] = None
        out["auc"] = None
    return out


def evaluate_bundle(bundle: ModelBundle, data: AlignedDataset, modes=None) -> dict:
    """Reports for normalized ``data``: per-encoder, per fusion mode, and TLX."""
    out = {"unimodal": {}, "fusion": {}, "tlx": None}
    for name, enc in bundle.encoders.items():
        proba = enc.predict_proba(data.blocks[name])[:, 1]
        out["unimodal"][name] = classification_block(proba, data.labels, enc.threshold)
    for mode in modes or bundle.modes:
        model = bundle.models[mode]
        proba = model.predict_proba(data.X)[:, 1]
        out["fusion"][mode] = classification_block(proba, data.labels, model.threshold)
    if bundle.tlx is not None and data.tlx is not None:
        pred = bundle.tlx.predict(data.X)
        raw = regression_report(pred, data.tlx)
        norm = regression_report(pred / 100.0, data.tlx / 100.0)
        out["tlx"] = {
            "rmse_normalized": norm.rmse,
            "rmse_raw": raw.rmse,
            "normalized": norm.to_dict(),
            "raw": raw.to_dict(),
        }
    return out


def comparison_rows(reports: dict):
    rows = []
    for mode, block in reports["fusion"].items():
        m = block["metrics"]
        rows.append({
            "model": mode,
            "accuracy": m["accuracy"],
            "precision": m["precision"],
            "recall": m["recall"],
            "f1": m["f1"],
            "auc": None if block["auc"] is None else round(block["auc"], 4),
        })
    return rows


def normalized_for_bundle(bundle: ModelBundle, dataset: AlignedDataset) -> AlignedDataset:
    if bundle.normalization_stats is None:
        return dataset
    return apply_normalization(dataset, bundle.normalization_stats)


def rows_for_keys(dataset: AlignedDataset, keys) -> Optional[np.ndarray]:
    wanted = set(keys)
    idx = np.array([i for i, k in enumerate(dataset.keys) if k in wanted], dtype=int)
    return idx
