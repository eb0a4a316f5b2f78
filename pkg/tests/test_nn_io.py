import json

import numpy as np
import pytest

from stressfusion.exceptions import CorruptFileError, FormatVersionError, WeightDimensionError
from stressfusion.nn import forward, init_net, load_weights, save_weights


@pytest.fixture
def net(rng):
    net = init_net([5, 7, 3, 1], ["relu", "relu", "sigmoid"], [0.5, 0.5, 0.0], rng)
    for layer in net.layers:
        layer.biases[:] = rng.normal(size=layer.biases.shape)
    return net


def test_round_trip_is_bit_exact(net, tmp_path, rng):
    path = tmp_path / "w.json"
    save_weights(net, path)
    loaded = load_weights(path)
    assert loaded.dims == net.dims
    for a, b in zip(net.layers, loaded.layers):
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.biases.tobytes() == b.biases.tobytes()
        assert (a.activation, a.dropout_rate) == (b.activation, b.dropout_rate)
    x = rng.normal(size=(10, 5))
    assert forward(net, x)[0].tobytes() == forward(loaded, x)[0].tobytes()


def test_header_fields(net, tmp_path):
    path = tmp_path / "w.json"
    save_weights(net, path)
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1
    assert doc["input_dim"] == 5
    assert [(l["in"], l["out"]) for l in doc["layers"]] == [(5, 7), (7, 3), (3, 1)]


def test_truncated_file(net, tmp_path):
    path = tmp_path / "w.json"
    save_weights(net, path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(CorruptFileError):
        load_weights(path)


def test_mismatched_declared_dims(net, tmp_path):
    path = tmp_path / "w.json"
    save_weights(net, path)
    doc = json.loads(path.read_text())
    doc["layers"][1]["in"] = 6
    path.write_text(json.dumps(doc))
    with pytest.raises(WeightDimensionError):
        load_weights(path)


def test_version_mismatch(net, tmp_path):
    path = tmp_path / "w.json"
    save_weights(net, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatVersionError):
        load_weights(path)
