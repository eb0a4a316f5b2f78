"""Model bundle: a directory holding everything needed to re-run inference."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

from ..data.schema import PHYSIO_DIM
from ..exceptions import FormatVersionError, SchemaError
from ..nn.estimators import DenseNetClassifier, DenseNetRegressor
from ..nn.io import load_weights, save_weights
from .models import EarlyFusionClassifier, LateFusionClassifier
from .tlx import TlxRegressor

BUNDLE_VERSION = 1
MANIFEST_NAME = "manifest.json"
_HEAD_CLASSES = {"early": EarlyFusionClassifier, "late": LateFusionClassifier}


def _params(est, drop=("encoders",)):
    params = est.get_params(deep=False)
    out = {}
    for k, v in params.items():
        if k in drop:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def dump_json(doc, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@dataclass
class ModelBundle:
    encoders: Dict[str, DenseNetClassifier]
    models: Dict[str, object]  # mode -> fitted fusion classifier
    tlx: Optional[TlxRegressor] = None
    normalization_stats: Optional[dict] = None
    split_keys: Optional[dict] = None
    config: dict = field(default_factory=dict)

    @property
    def modes(self):
        return list(self.models)

    @property
    def threshold(self) -> float:
        return next(iter(self.models.values())).threshold if self.models else 0.5


def save_bundle(bundle: ModelBundle, directory) -> None:
    os.makedirs(os.path.join(directory, "encoders"), exist_ok=True)
    os.makedirs(os.path.join(directory, "heads"), exist_ok=True)
    manifest = {
        "format_version": BUNDLE_VERSION,
        "modes": bundle.modes,
        "threshold": bundle.threshold,
        "physio_dim": PHYSIO_DIM,
        "target_scale": bundle.tlx.target_scale if bundle.tlx is not None else None,
        "encoders": {},
        "heads": {},
        "tlx": None,
        "normalization": None,
        "split": None,
        "config": bundle.config,
    }
    for name, enc in bundle.encoders.items():
        rel = f"encoders/{name}.json"
        save_weights(enc.net_, os.path.join(directory, rel))
        manifest["encoders"][name] = {
            "file": rel,
            "input_dim": enc.net_.input_dim,
            "feature_dim": enc.feature_dim,
            "params": _params(enc),
        }
    for mode, model in bundle.models.items():
        rel = f"heads/{mode}.json"
        save_weights(model.head_.net_, os.path.join(directory, rel))
        manifest["heads"][mode] = {
            "file": rel,
            "input_dim": model.fusion_input_dim,
            "params": _params(model),
        }
    if bundle.tlx is not None:
        rel = "heads/tlx.json"
        save_weights(bundle.tlx.head_.net_, os.path.join(directory, rel))
        manifest["tlx"] = {"file": rel, "params": _params(bundle.tlx)}
    if bundle.normalization_stats is not None:
        dump_json(bundle.normalization_stats, os.path.join(directory, "normalization.json"))
        manifest["normalization"] = "normalization.json"
    if bundle.split_keys is not None:
        dump_json(bundle.split_keys, os.path.join(directory, "split.json"))
        manifest["split"] = "split.json"
    dump_json(manifest, os.path.join(directory, MANIFEST_NAME))


def _tupled(params, *names):
    return {k: tuple(v) if k in names and v is not None else v for k, v in params.items()}


def load_bundle(directory) -> ModelBundle:
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no bundle manifest at {path}")
    manifest = read_json(path)
    if manifest.get("format_version") != BUNDLE_VERSION:
        raise FormatVersionError(f"bundle format {manifest.get('format_version')!r} unsupported")

    encoders = {}
    for name, entry in manifest["encoders"].items():
        net = load_weights(os.path.join(directory, entry["file"]))
        if net.input_dim != entry["input_dim"]:
            raise SchemaError(f"encoder {name}: weight file disagrees with manifest input_dim")
        encoders[name] = DenseNetClassifier.from_net(net, **_tupled(entry["params"], "hidden_dims"))

    models = {}
    for mode, entry in manifest["heads"].items():
        cls = _HEAD_CLASSES[mode]
        model = cls(encoders=encoders, **_tupled(entry["params"], "hidden_dims"))
        net = load_weights(os.path.join(directory, entry["file"]))
        if net.input_dim != model.fusion_input_dim or net.input_dim != entry["input_dim"]:
            raise SchemaError(f"{mode} head input {net.input_dim} != fusion width {model.fusion_input_dim}")
        head_params = {k: v for k, v in model.get_params().items() if k != "encoders"}
        model.head_ = DenseNetClassifier.from_net(net, **head_params)
        model.classes_ = model.head_.classes_
        model.n_features_in_ = net.input_dim
        models[mode] = model

    tlx = None
    if manifest.get("tlx"):
        entry = manifest["tlx"]
        tlx = TlxRegressor(encoders=encoders, **_tupled(entry["params"], "hidden_dims"))
        net = load_weights(os.path.join(directory, entry["file"]))
        tlx.head_ = DenseNetRegressor.from_net(
            net,
            hidden_dims=tlx.hidden_dims,
            dropout_rate=tlx.dropout_rate,
            target_range=(0.0, 100.0 / tlx._divisor),
        )
        tlx.n_features_in_ = net.input_dim

    stats = read_json(os.path.join(directory, manifest["normalization"])) if manifest.get("normalization") else None
    split_keys = read_json(os.path.join(directory, manifest["split"])) if manifest.get("split") else None
    return ModelBundle(encoders, models, tlx, stats, split_keys, manifest.get("config", {}))
