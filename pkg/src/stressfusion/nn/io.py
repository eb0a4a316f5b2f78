"""Versioned JSON weight files."""

import json
import os

import numpy as np

from ..exceptions import CorruptFileError, FormatVersionError, WeightDimensionError
from .core import DenseLayer, DenseNet

FORMAT_VERSION = 1


def net_to_dict(net: DenseNet) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "layers": [
            {
                "in": layer.n_in,
                "out": layer.n_out,
                "activation": layer.activation,
                "dropout_rate": layer.dropout_rate,
                # float repr is the shortest string that round-trips exactly
                "weights": layer.weights.tolist(),
                "biases": layer.biases.tolist(),
            }
            for layer in net.layers
        ],
    }


def net_from_dict(doc) -> DenseNet:
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptFileError("not a weight document")
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatVersionError(
            f"weight format version {doc['format_version']!r}, expected {FORMAT_VERSION}"
        )
    try:
        input_dim = int(doc["input_dim"])
        specs = doc["layers"]
        layers = []
        prev = input_dim
        for i, spec in enumerate(specs):
            n_in, n_out = int(spec["in"]), int(spec["out"])
            w = np.array(spec["weights"], dtype=float)
            b = np.array(spec["biases"], dtype=float)
            if n_in != prev or w.shape != (n_out, n_in) or b.shape != (n_out,):
                raise WeightDimensionError(
                    f"layer {i}: declared {n_out}x{n_in} (chained input {prev}), "
                    f"found weights {w.shape}, biases {b.shape}"
                )
            layers.append(DenseLayer(w, b, spec["activation"], float(spec["dropout_rate"])))
            prev = n_out
    except WeightDimensionError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFileError(f"malformed weight document: {exc}") from exc
    return DenseNet(layers, input_dim)


def save_weights(net: DenseNet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(net_to_dict(net), fh, indent=1)
        fh.write("\n")


def load_weights(path) -> DenseNet:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    return net_from_dict(doc)
