"""Multinomial logistic regression.

Softmax negative log-likelihood with an L2 penalty, minimized by gradient
descent with a backtracking line search.  The first label (sorted order)
is the reference class: its coefficient column stays pinned at zero, so
the remaining columns are log-odds against it.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..errors import DataValidationError, NumericalError


def _check_training(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=object).ravel()
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DataValidationError("X must be a nonempty 2-D matrix")
    if len(y) != X.shape[0]:
        raise DataValidationError("X and y length mismatch")
    if not np.isfinite(X).all():
        raise DataValidationError("X contains non-finite values")
    classes = tuple(sorted(set(y)))
    if len(classes) < 2:
        raise DataValidationError("need at least 2 classes")
    index = {c: i for i, c in enumerate(classes)}
    y_idx = np.fromiter((index[v] for v in y), dtype=np.int64, count=len(y))
    return X, y_idx, classes


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_gradient(W, X_aug, y_idx, l2):
    """Mean NLL plus (l2/2)|W|^2 and its gradient.

    ``W`` is (d+1, c) with the intercept in row 0; neither the intercept
    row nor the reference column (0) is penalized, and the returned
    gradient is zeroed on the reference column to keep it pinned.
    """
    n = X_aug.shape[0]
    logits = X_aug @ W
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    nll = float(np.mean(log_norm - shifted[np.arange(n), y_idx]))
    penalized = W.copy()
    penalized[0, :] = 0.0
    penalized[:, 0] = 0.0
    loss = nll + 0.5 * l2 * float(np.sum(penalized**2))

    P = _softmax(logits)
    P[np.arange(n), y_idx] -= 1.0
    grad = X_aug.T @ P / n + l2 * penalized
    grad[:, 0] = 0.0
    return loss, grad


class MultinomialLogit(BaseEstimator, ClassifierMixin):
    """Gradient-descent softmax regression.

    Parameters
    ----------
    l2 : float
        Ridge strength on the non-intercept, non-reference coefficients.
    tol : float
        Convergence threshold on the gradient max-norm.
    max_iter : int
        Cap on accepted descent steps.
    """

    def __init__(self, l2=1e-4, tol=1e-6, max_iter=500):
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, coef_init=None):
        X, y_idx, classes = _check_training(X, y)
        if self.l2 < 0:
            raise DataValidationError("l2 must be nonnegative")
        n, d = X.shape
        c = len(classes)
        Xa = np.hstack([np.ones((n, 1)), X])
        W = np.zeros((d + 1, c))
        if coef_init is not None:
            W[:] = np.asarray(coef_init, dtype=np.float64)
            W[:, 0] = 0.0

        loss, grad = loss_and_gradient(W, Xa, y_idx, self.l2)
        if not np.isfinite(loss):
            raise NumericalError(
                "non-finite loss at start; rescale inputs or set l2 > 0"
            )
        history = [loss]
        step = 1.0
        converged = False
        for it in range(1, self.max_iter + 1):
            gnorm2 = float(np.sum(grad**2))
            if not np.isfinite(gnorm2):
                raise NumericalError(
                    "non-finite gradient; data may be separable, set l2 > 0"
                )
            if np.sqrt(gnorm2) == 0.0 or np.abs(grad).max() < self.tol:
                converged = True
                break
            step = min(step * 2.0, 1e6)
            accepted = False
            for _ in range(60):
                trial = W - step * grad
                new_loss, new_grad = loss_and_gradient(
                    trial, Xa, y_idx, self.l2
                )
                if np.isfinite(new_loss) and new_loss <= loss - 0.5 * step * gnorm2:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                raise NumericalError(
                    "line search failed to decrease the loss; data may be "
                    "separable, set l2 > 0"
                )
            W, loss, grad = trial, new_loss, new_grad
            history.append(loss)
        else:
            it = self.max_iter

        self.classes_ = classes
        self.coef_ = W
        self.loss_history_ = np.asarray(history)
        self.converged_ = converged
        self.n_iter_ = it
        return self

    def _logits(self, X):
        if not hasattr(self, "coef_"):
            raise NotFittedError("fit before predict")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.coef_.shape[0] - 1:
            raise DataValidationError("wrong predictor count")
        return np.hstack([np.ones((X.shape[0], 1)), X]) @ self.coef_

    def predict_proba(self, X):
        return _softmax(self._logits(X))

    def predict(self, X):
        picks = np.argmax(self.predict_proba(X), axis=1)
        return np.asarray([self.classes_[i] for i in picks], dtype=object)

    @property
    def loss_(self):
        if not hasattr(self, "loss_history_"):
            raise NotFittedError("fit first")
        return float(self.loss_history_[-1])


def train_multinomial_lr(X, y, l2=1e-4, tol=1e-6, max_iter=500):
    """Functional wrapper returning a fitted :class:`MultinomialLogit`."""
    return MultinomialLogit(l2=l2, tol=tol, max_iter=max_iter).fit(X, y)
