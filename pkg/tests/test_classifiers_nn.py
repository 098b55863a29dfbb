"""Neural network classifier: gradient correctness, standardization,
the XOR capacity check, and the hidden-size sweep."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from conftest import central_differences, norm_scaled_error
from debtminer import (
    DataValidationError,
    NeuralNetClassifier,
    train_neural_net,
    tune_neural_net,
)
from debtminer.classifiers.neural import net_loss_and_gradient


def _blobs(n_per=40, gap=6.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([
        rng.standard_normal((n_per, 2)) - gap / 2,
        rng.standard_normal((n_per, 2)) + gap / 2,
    ])
    y = np.array(["low"] * n_per + ["high"] * n_per, dtype=object)
    return X, y


def test_gradients_match_central_differences():
    rng = np.random.default_rng(0)
    n, d, h, c = 25, 3, 4, 3
    Z = rng.standard_normal((n, d))
    onehot = np.zeros((n, c))
    onehot[np.arange(n), rng.integers(0, c, n)] = 1.0
    weights = [
        rng.standard_normal((d, h)) * 0.5,
        rng.standard_normal(h) * 0.5,
        rng.standard_normal((h, c)) * 0.5,
        rng.standard_normal(c) * 0.5,
    ]
    _, grads = net_loss_and_gradient(weights, Z, onehot)

    def loss_with(i, V):
        trial = list(weights)
        trial[i] = V
        return net_loss_and_gradient(trial, Z, onehot)[0]

    for i in range(4):
        fd = central_differences(
            lambda V: loss_with(i, V), np.asarray(weights[i]), h=1e-4
        )
        assert norm_scaled_error(fd, grads[i]) < 1e-5


def test_predictions_are_scale_invariant():
    """Inputs are standardized, so rescaling every predictor by a
    power of two (exact in floating point) changes nothing at all."""
    X, y = _blobs(seed=2)
    a = NeuralNetClassifier(hidden=3, epochs=300, seed=1).fit(X, y)
    b = NeuralNetClassifier(hidden=3, epochs=300, seed=1).fit(X * 1024.0, y)
    assert np.array_equal(a.predict_proba(X), b.predict_proba(X * 1024.0))
    assert np.array_equal(a.predict(X), b.predict(X * 1024.0))


def test_best_weights_are_kept():
    X, y = _blobs(seed=3)
    model = NeuralNetClassifier(hidden=3, epochs=400, seed=0).fit(X, y)
    assert model.best_loss_ == model.loss_history_.min()
    assert model.loss_history_.shape == (400,)


def test_xor_needs_the_hidden_layer(xor_data):
    X, y = xor_data
    model = NeuralNetClassifier(
        hidden=2, epochs=5000, learning_rate=0.5, seed=0
    ).fit(X, y)
    assert (model.predict(X) == y).mean() == 1.0


def test_fit_and_predict_validation():
    X, y = _blobs(n_per=10)
    with pytest.raises(DataValidationError, match="hidden"):
        NeuralNetClassifier(hidden=0).fit(X, y)
    with pytest.raises(DataValidationError, match="epochs"):
        NeuralNetClassifier(epochs=0).fit(X, y)
    with pytest.raises(NotFittedError):
        NeuralNetClassifier().predict(X)
    model = NeuralNetClassifier(hidden=2, epochs=50).fit(X, y)
    with pytest.raises(DataValidationError, match="predictor count"):
        model.predict_proba(np.zeros((2, 5)))
    wrapped = train_neural_net(X, y, hidden=2, epochs=50)
    assert np.array_equal(model.predict_proba(X), wrapped.predict_proba(X))


def test_tuning_validates_the_size_range():
    X, y = _blobs(n_per=15)
    with pytest.raises(DataValidationError, match="1..10"):
        tune_neural_net(X, y, hidden_range=range(0, 3))
    with pytest.raises(DataValidationError, match="1..10"):
        tune_neural_net(X, y, hidden_range=[5, 11])
    with pytest.raises(DataValidationError, match="1..10"):
        tune_neural_net(X, y, hidden_range=[])


def test_tuning_prefers_the_smallest_adequate_network():
    X, y = _blobs()
    tuned = tune_neural_net(X, y, hidden_range=[3, 1, 2], inner_k=5,
                            epochs=400, seed=0)
    assert set(tuned.cv_accuracy) == {1, 2, 3}
    # every size separates the blobs, so the tie goes to one neuron
    assert all(v == 1.0 for v in tuned.cv_accuracy.values())
    assert tuned.best_hidden == 1
    assert tuned.best_accuracy == 1.0
    assert tuned.model.weights_[0].shape[1] == 1
    assert np.array_equal(tuned.predict_proba(X),
                          tuned.model.predict_proba(X))
    assert (tuned.predict(X) == y).all()

    again = tune_neural_net(X, y, hidden_range=[3, 1, 2], inner_k=5,
                            epochs=400, seed=0)
    assert again.cv_accuracy == tuned.cv_accuracy
    assert np.array_equal(again.model.predict_proba(X),
                          tuned.model.predict_proba(X))
