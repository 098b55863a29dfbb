"""One-hidden-layer neural network classifier.

Sigmoid hidden units, softmax output, cross-entropy loss, full-batch
gradient descent on standardized inputs.  Capacity control is the hidden
size; :func:`tune_neural_net` sweeps 1..10 neurons with an inner
stratified cross-validation and keeps the best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..errors import DataValidationError, NumericalError
from .logistic import _check_training, _softmax


def net_loss_and_gradient(weights, Z, onehot):
    """Cross-entropy loss and gradients for one forward/backward pass.

    ``weights`` is (W1, b1, W2, b2); ``Z`` is the standardized input.
    Returns (loss, (dW1, db1, dW2, db2)).
    """
    W1, b1, W2, b2 = weights
    n = Z.shape[0]
    H = expit(Z @ W1 + b1)
    logits = H @ W2 + b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    loss = -float(np.sum(onehot * log_probs)) / n

    dlogits = (np.exp(log_probs) - onehot) / n
    dW2 = H.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dH = dlogits @ W2.T
    dpre = dH * H * (1.0 - H)
    dW1 = Z.T @ dpre
    db1 = dpre.sum(axis=0)
    return loss, (dW1, db1, dW2, db2)


class NeuralNetClassifier(BaseEstimator, ClassifierMixin):
    """Full-batch gradient descent, weights kept at the best training loss.

    Parameters
    ----------
    hidden : int
        Hidden-layer width.
    epochs : int
    learning_rate : float
    seed : int
        Seeds the weight initialization.
    """

    def __init__(self, hidden=4, epochs=10000, learning_rate=0.1, seed=0):
        self.hidden = hidden
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y):
        X, y_idx, classes = _check_training(X, y)
        if self.hidden < 1:
            raise DataValidationError("hidden must be >= 1")
        if self.epochs < 1:
            raise DataValidationError("epochs must be >= 1")
        n, d = X.shape
        c = len(classes)

        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd == 0, 1.0, sd)
        Z = (X - mean) / sd
        onehot = np.zeros((n, c))
        onehot[np.arange(n), y_idx] = 1.0

        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(0,))
        )
        h = self.hidden
        weights = [
            rng.standard_normal((d, h)) / np.sqrt(d),
            np.zeros(h),
            rng.standard_normal((h, c)) / np.sqrt(h),
            np.zeros(c),
        ]

        best_loss = np.inf
        best = [w.copy() for w in weights]
        history = np.empty(self.epochs)
        lr = self.learning_rate
        for epoch in range(self.epochs):
            loss, grads = net_loss_and_gradient(weights, Z, onehot)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss at epoch {epoch}")
            history[epoch] = loss
            if loss < best_loss:
                best_loss = loss
                best = [w.copy() for w in weights]
            for w, g in zip(weights, grads):
                w -= lr * g

        self.classes_ = classes
        self.mean_ = mean
        self.sd_ = sd
        self.weights_ = best
        self.best_loss_ = float(best_loss)
        self.loss_history_ = history
        return self

    def predict_proba(self, X):
        if not hasattr(self, "weights_"):
            raise NotFittedError("fit before predict")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.mean_):
            raise DataValidationError("wrong predictor count")
        W1, b1, W2, b2 = self.weights_
        H = expit(((X - self.mean_) / self.sd_) @ W1 + b1)
        return _softmax(H @ W2 + b2)

    def predict(self, X):
        picks = np.argmax(self.predict_proba(X), axis=1)
        return np.asarray([self.classes_[i] for i in picks], dtype=object)


def train_neural_net(X, y, hidden=4, epochs=10000, learning_rate=0.1, seed=0):
    """Functional wrapper returning a fitted :class:`NeuralNetClassifier`."""
    return NeuralNetClassifier(
        hidden=hidden, epochs=epochs, learning_rate=learning_rate, seed=seed,
    ).fit(X, y)


@dataclass(frozen=True)
class TunedNeuralNet:
    """Winner of a hidden-size sweep plus the full accuracy-by-size table."""

    best_hidden: int
    cv_accuracy: dict
    model: NeuralNetClassifier

    @property
    def best_accuracy(self) -> float:
        return self.cv_accuracy[self.best_hidden]

    def predict(self, X):
        return self.model.predict(X)

    def predict_proba(self, X):
        return self.model.predict_proba(X)


def tune_neural_net(X, y, hidden_range=range(1, 11), inner_k=5, epochs=2000,
                    learning_rate=0.1, seed=0) -> TunedNeuralNet:
    """Pick the hidden size with the best inner-CV accuracy.

    Candidates must lie in 1..10; ties go to the smaller network.  The
    winning size is refit on all rows.
    """
    from ..evaluation import make_cv_plan

    sizes = sorted(set(int(h) for h in hidden_range))
    if not sizes or sizes[0] < 1 or sizes[-1] > 10:
        raise DataValidationError("hidden sizes must lie in 1..10")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=object).ravel()
    plan = make_cv_plan(y, k=inner_k, repeats=1, seed=seed)

    accuracy = {}
    for h in sizes:
        correct = 0
        for fold in range(inner_k):
            test = plan.assignment[0] == fold
            net = NeuralNetClassifier(
                hidden=h, epochs=epochs, learning_rate=learning_rate,
                seed=seed + 1000 * h + fold,
            ).fit(X[~test], y[~test])
            correct += int(np.sum(net.predict(X[test]) == y[test]))
        accuracy[h] = correct / len(y)

    best = sizes[0]
    for h in sizes[1:]:
        if accuracy[h] > accuracy[best]:
            best = h
    model = NeuralNetClassifier(
        hidden=best, epochs=epochs, learning_rate=learning_rate, seed=seed,
    ).fit(X, y)
    return TunedNeuralNet(best_hidden=best, cv_accuracy=accuracy, model=model)
