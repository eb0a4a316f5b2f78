"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` (the verdict lines
are printed even under output capture) or ``python tests/test_acceptance.py``.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import (  # noqa: E402
    enumerated_metrics,
    mann_whitney_auc,
    max_relative_error,
    numeric_gradients,
    random_gradcheck_case,
    run_length_alerts,
)
from stressfusion import synth  # noqa: E402
from stressfusion.cli import main as cli_main  # noqa: E402
from stressfusion.data import SplitSpec, kfold, load_dataset, read_manifest, split_indices  # noqa: E402
from stressfusion.fusion import TlxRegressor, load_bundle, save_bundle  # noqa: E402
from stressfusion.metrics import confusion, report, roc  # noqa: E402
from stressfusion.nn import DenseLayer, DenseNet, backward, forward, loss  # noqa: E402
from stressfusion.pipeline import Recipe, derive_seed, evaluate_bundle, fit_recipe  # noqa: E402
from stressfusion.timeline import (  # noqa: E402
    PersistencePolicy,
    StressTimeline,
    alert_index_spans,
    apply_persistence,
    export_timeline,
    import_timeline,
    run_timeline,
    span_overlap,
)


@pytest.fixture(autouse=True)
def _report_line(request, capsys):
    yield
    info = getattr(request.node, "criterion", None)
    if info is None:
        return
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    with capsys.disabled():
        print(f"\nACCEPTANCE {info[0]:>2} {'PASS' if ok else 'FAIL'}: {info[1]}{(' | ' + info[2]) if info[2] else ''}")


def criterion(request, number, title):
    request.node.criterion = (number, title, "")


def detail(request, text):
    number, title, _ = request.node.criterion
    request.node.criterion = (number, title, text)


def encoder_bytes(encoders):
    return {n: [(l.weights.tobytes(), l.biases.tobytes()) for l in e.net_.layers] for n, e in encoders.items()}


def test_01_gradient_correctness(request):
    criterion(request, 1, "analytic gradients match central differences on 100 random nets")
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        net, x, y, kind = random_gradcheck_case(rng)
        assert len(net.layers) <= 3 and max(net.dims) <= 8
        _, trace = forward(net, x)
        analytic = backward(net, trace, y, kind)
        worst = max(worst, max_relative_error(analytic, numeric_gradients(net, x, y, kind, step=1e-5)))
    elapsed = time.perf_counter() - start
    detail(request, f"max rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-5
    assert elapsed < 30


def test_02_loss_oracles(request):
    criterion(request, 2, "BCE / RMSE hand values")
    bce = loss("bce", [0.5, 0.5], [1, 0])
    rmse = loss("rmse", [3.0, 4.0], [0.0, 0.0])
    perfect = loss("bce", [1.0, 0.0], [1, 0])
    detail(request, f"bce={bce:.12f} rmse={rmse:.12f} clamped={perfect:.2e}")
    assert abs(bce - math.log(2)) <= 1e-9
    assert abs(rmse - math.sqrt(12.5)) <= 1e-9
    assert perfect < 1e-6


def test_03_dropout_expectation(request):
    criterion(request, 3, "inverted dropout keeps the expected activation")
    width, value = 16, 2.0
    layer = DenseLayer(np.eye(width), np.zeros(width), "identity", dropout_rate=0.5)
    net = DenseNet([layer, DenseLayer(np.eye(width), np.zeros(width), "identity")])
    out, trace = forward(net, np.full((10_000, width), value), "train", np.random.default_rng(0))
    assert trace[0].mask is not None and trace[1].mask is None
    rel = abs(out.mean() - value) / value
    detail(request, f"10,000 masks x {width} units, relative deviation {rel:.4f}")
    assert rel <= 0.02


def test_04_metric_oracles(request):
    criterion(request, 4, "confusion/report and AUC match enumeration oracles")
    rng = np.random.default_rng(99)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        p, y = rng.integers(0, 2, n), rng.integers(0, 2, n)
        rep = report(confusion(p, y))
        acc, prec, rec, f1 = enumerated_metrics(p, y)
        assert (rep.accuracy, rep.precision, rep.recall) == (acc, prec, rec)
        assert rep.f1 == f1 or abs(rep.f1 - f1) <= 1e-15
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 80))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        s = np.round(rng.random(n), int(rng.integers(1, 4)))
        worst = max(worst, abs(roc(s, y).auc - mann_whitney_auc(s, y)))
    detail(request, f"worst AUC gap {worst:.1e}")
    assert worst <= 1e-9


@pytest.fixture(scope="module")
def paper_shape(tmp_path_factory):
    out = tmp_path_factory.mktemp("paper_shape")
    start = time.perf_counter()
    path = synth.write_synth(synth.generate(synth.preset("paper-shape", seed=0)), str(out))
    dataset, _ = load_dataset(read_manifest(path))
    train_idx, test_idx = split_indices(dataset.labels, SplitSpec(0.7, seed=0))
    bundle, data = fit_recipe(dataset, train_idx, Recipe(epochs=200, seed=0))
    reports = evaluate_bundle(bundle, data.subset(test_idx))
    return dataset, bundle, data, test_idx, reports, time.perf_counter() - start


def test_05_synthetic_benchmark(request, paper_shape):
    criterion(request, 5, "paper-shape benchmark: early >= 0.90, early >= late - 0.02, unimodal >= 0.65")
    dataset, _, _, _, reports, elapsed = paper_shape
    early = reports["fusion"]["early"]["metrics"]["accuracy"]
    late = reports["fusion"]["late"]["metrics"]["accuracy"]
    uni = {k: v["metrics"]["accuracy"] for k, v in reports["unimodal"].items()}
    detail(request, f"{len(dataset)} rows, early {early:.4f}, late {late:.4f}, "
                    + ", ".join(f"{k} {v:.4f}" for k, v in uni.items()) + f", {elapsed:.0f}s")
    assert abs(len(dataset) - 956) <= 40
    assert early >= 0.90
    assert early >= late - 0.02
    assert all(v >= 0.65 for v in uni.values())
    assert elapsed < 600


def test_06_tlx_transfer(request, tmp_path):
    criterion(request, 6, "frozen-encoder TLX regressor RMSE <= 0.05 on planted-linear targets")
    path = synth.write_synth(synth.generate(synth.preset("tlx-linear", seed=0)), str(tmp_path))
    dataset, _ = load_dataset(read_manifest(path))
    train_idx, test_idx = split_indices(dataset.labels, SplitSpec(0.7, seed=0))
    bundle, data = fit_recipe(dataset, train_idx, Recipe(epochs=200, seed=0, modes=("early",)))
    before = encoder_bytes(bundle.encoders)
    train, test = data.subset(train_idx), data.subset(test_idx)
    reg = TlxRegressor(encoders=bundle.encoders, random_state=derive_seed(0, "tlx")).fit(train, train.tlx)
    after = encoder_bytes(bundle.encoders)
    rmse = float(np.sqrt(np.mean((reg.predict_scaled(test) - test.tlx / 100.0) ** 2)))
    detail(request, f"test RMSE {rmse:.4f} (0-1 scale), encoders unchanged: {before == after}")
    assert before == after
    assert rmse <= 0.05


def test_07_determinism(request, tmp_path):
    criterion(request, 7, "two train runs with one seed give byte-identical outputs")
    data = tmp_path / "data"
    assert cli_main(["synth", "--preset", "drift", "--seed", "1", "--out-dir", str(data)]) == 0
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli_main(["train", "--manifest", str(data / "manifest.yaml"), "--out-dir", str(out),
                         "--seed", "7", "--with-tlx"]) == 0
        files = {}
        for base, _, names in os.walk(out):
            for n in names:
                p = os.path.join(base, n)
                with open(p, "rb") as fh:
                    files[os.path.relpath(p, out)] = fh.read()
        digests.append(files)
    detail(request, f"{len(digests[0])} files compared")
    assert digests[0].keys() == digests[1].keys()
    assert all(digests[0][k] == digests[1][k] for k in digests[0])


def test_08_pipeline_arithmetic(request):
    criterion(request, 8, "956 -> 669/287 split; k-fold partitions for k in {2,5,10}")
    labels = np.array([0, 1] * 478)
    tr, te = split_indices(labels, SplitSpec(0.7, seed=0))
    assert (len(tr), len(te)) == (669, 287)
    checked = 0
    for k in (2, 5, 10):
        for n in range(k, 301):
            folds = kfold(n, k, seed=n)
            val = np.concatenate([va for _, va in folds])
            assert len(folds) == k
            assert np.array_equal(np.sort(val), np.arange(n))
            sizes = [len(va) for _, va in folds]
            assert max(sizes) - min(sizes) <= 1
            for t, v in folds:
                assert np.intersect1d(t, v).size == 0 and t.size + v.size == n
            checked += 1
    detail(request, f"{checked} fold layouts checked")


def _label_corpus(n_seq=1000, seed=7):
    rng = np.random.default_rng(seed)
    for _ in range(n_seq):
        n = int(rng.integers(1, 120))
        yield (rng.random(n) < rng.random()).astype(int), int(rng.integers(1, 10))


def test_09_timeline(request, tmp_path):
    criterion(request, 9, "run-length oracle, drift recovery >= 80%, idempotence, min_run monotonicity")
    for labels, min_run in _label_corpus():
        assert alert_index_spans(labels, min_run) == run_length_alerts(labels, min_run)
        tl = StressTimeline(np.arange(len(labels)), labels * 0.9, labels)
        once = apply_persistence(tl, PersistencePolicy(min_run))
        assert apply_persistence(once, PersistencePolicy(min_run)) == once
        bigger = apply_persistence(tl, PersistencePolicy(min_run + 1))
        assert len(bigger.alerts) <= len(once.alerts)
        assert all(any(a0 <= a and b <= b0 for a0, b0 in once.alerts) for a, b in bigger.alerts)

    data = synth.generate(synth.preset("drift", seed=0))
    path = synth.write_synth(data, str(tmp_path))
    dataset, _ = load_dataset(read_manifest(path))
    train_idx, _ = split_indices(dataset.labels, SplitSpec(0.7, seed=0))
    bundle, normalized = fit_recipe(dataset, train_idx, Recipe(epochs=200, seed=0, modes=("early",)))
    tl = apply_persistence(run_timeline(bundle.models["early"], records=normalized), PersistencePolicy(5))
    overlaps = [span_overlap(tl.alerts, a, b, tl.timestamps) for a, b in data.episodes]
    detail(request, f"{len(overlaps)} planted episodes, min overlap {min(overlaps):.3f}")
    assert all(o >= 0.8 for o in overlaps)


def test_10_serialization(request, paper_shape, tmp_path):
    criterion(request, 10, "bundle and timeline round-trips are identities")
    _, bundle, data, test_idx, _, _ = paper_shape
    test = data.subset(test_idx)
    save_bundle(bundle, tmp_path / "bundle")
    loaded = load_bundle(tmp_path / "bundle")
    for mode in bundle.modes:
        assert bundle.models[mode].predict_proba(test).tobytes() == loaded.models[mode].predict_proba(test).tobytes()
    for name in bundle.encoders:
        a = bundle.encoders[name].predict_proba(test.blocks[name])
        assert a.tobytes() == loaded.encoders[name].predict_proba(test.blocks[name]).tobytes()
    tl = apply_persistence(run_timeline(loaded.models["early"], records=test), PersistencePolicy(3))
    for name in ("tl.csv", "tl.json"):
        export_timeline(tl, tmp_path / name)
        assert import_timeline(tmp_path / name) == tl
    detail(request, f"{len(bundle.modes)} heads, {len(bundle.encoders)} encoders, {len(tl)} timeline entries")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
