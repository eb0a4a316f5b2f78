import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from stressfusion import synth  # noqa: E402
from stressfusion.data import SplitSpec, align, load_manifest_frames, normalize, read_manifest, split_indices  # noqa: E402
from stressfusion.fusion import DEFAULT_ENCODER_SPECS, make_encoder, train_unimodal  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synth_dir(tmp_path_factory):
    """400-row synthetic dataset on disk, no attrition."""
    out = tmp_path_factory.mktemp("synth_small")
    cfg = synth.SynthConfig(rows=400, noise_sigma=0.7, seed=3)
    return synth.write_synth(synth.generate(cfg), str(out))


@pytest.fixture(scope="session")
def small_dataset(small_synth_dir):
    manifest = read_manifest(small_synth_dir)
    frames = load_manifest_frames(manifest)
    dataset, _ = align(frames, manifest.labels_source, manifest.tlx_source)
    return dataset


@pytest.fixture(scope="session")
def small_split(small_dataset):
    tr, te = split_indices(small_dataset.labels, SplitSpec(0.7, seed=0))
    data = normalize(small_dataset, tr)
    return data.subset(tr), data.subset(te)


@pytest.fixture(scope="session")
def small_encoders(small_split):
    train, _ = small_split
    encs = {}
    for name, spec in DEFAULT_ENCODER_SPECS.items():
        enc = make_encoder(spec, epochs=60, random_state=7)
        encs[name] = train_unimodal(enc, train.blocks[name], train.labels).encoder
    return encs


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
