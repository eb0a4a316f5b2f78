import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from stressfusion.data import ZScoreNormalizer
from stressfusion.exceptions import DimensionError
from stressfusion.nn import DenseNetClassifier, DenseNetRegressor


@pytest.fixture
def separable(rng):
    X = rng.normal(size=(200, 4))
    y = (X @ np.array([1.0, -2.0, 0.5, 0.0]) > 0).astype(int)
    return X, y


def test_get_params_and_clone():
    clf = DenseNetClassifier(hidden_dims=(8, 4), epochs=3)
    params = clf.get_params()
    assert params["hidden_dims"] == (8, 4) and params["epochs"] == 3
    twin = clone(clf)
    assert twin.get_params() == params


def test_classifier_learns(separable):
    X, y = separable
    clf = DenseNetClassifier(hidden_dims=(16,), epochs=100, learning_rate=0.05, random_state=1).fit(X, y)
    assert clf.score(X, y) >= 0.9
    proba = clf.predict_proba(X)
    assert proba.shape == (200, 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert len(clf.history_) == 100


def test_transform_is_last_hidden_layer(separable):
    X, y = separable
    clf = DenseNetClassifier(hidden_dims=(8, 5), epochs=2).fit(X, y)
    feats = clf.transform(X)
    assert feats.shape == (200, 5)
    assert np.all(feats >= 0)


def test_in_sklearn_pipeline(separable):
    X, y = separable
    pipe = make_pipeline(ZScoreNormalizer(), DenseNetClassifier(epochs=20, learning_rate=0.05))
    pipe.fit(X * 100 + 7, y)
    assert pipe.predict(X * 100 + 7).shape == (200,)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        DenseNetClassifier().predict_proba(np.zeros((1, 3)))


def test_wrong_width(separable):
    X, y = separable
    clf = DenseNetClassifier(epochs=1).fit(X, y)
    with pytest.raises(DimensionError):
        clf.predict(X[:, :3])


def test_single_class_labels_train(rng):
    X = rng.normal(size=(30, 3))
    clf = DenseNetClassifier(epochs=5).fit(X, np.ones(30, dtype=int))
    assert set(clf.predict(X)) <= {0, 1}


def test_non_binary_labels_rejected(rng):
    with pytest.raises(ValueError):
        DenseNetClassifier(epochs=1).fit(rng.normal(size=(5, 2)), [0, 1, 2, 0, 1])


def test_regressor_clamps(rng):
    X = rng.normal(size=(100, 2))
    y = np.clip(0.5 + 0.2 * X[:, 0], 0, 1)
    reg = DenseNetRegressor(epochs=50, dropout_rate=0.0, random_state=3).fit(X, y)
    far = np.array([[50.0, 0.0], [-50.0, 0.0]])
    pred = reg.predict(far)
    assert np.all((pred >= 0) & (pred <= 1))
    raw = reg.predict_raw(far)
    assert raw[0] > 1 or raw[1] < 0
