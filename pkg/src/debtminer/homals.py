"""Homogeneity analysis by alternating least squares.

Scores the n objects and the categories of a set of categorical variables
in a shared p-dimensional space, minimizing the summed squared distance
between each object and the category points it belongs to (the departure
from homogeneity).  The object scores double as low-dimensional numeric
replacements for the variable block, and the category map is the noise
diagnostic used to spot systematic non-response.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .encoding import FULL_INDICATOR, EncodedMatrix
from .errors import DataValidationError, EncodingError


class Homals(BaseEstimator, TransformerMixin):
    """Alternating least squares homogeneity analysis.

    Parameters
    ----------
    n_dims : int
        Dimensions p of the joint space.
    tol : float
        Relative loss decrease that counts as converged.
    max_iter : int
        Iteration cap; hitting it leaves ``converged_`` False.
    seed : int
        Seeds the random orthonormal start.

    Attributes
    ----------
    object_scores_ : ndarray of shape (n, p)
        Centered object scores X with X.T @ X = n * I.
    quantifications_ : dict
        Per variable, the (k_j, p) category points; rows are the centroids
        of the object scores of their members.
    loss_history_ : ndarray
        Departure from homogeneity per iteration, non-increasing.
    converged_ : bool
    n_iterations_ : int
    category_counts_ : dict
        Per variable, member counts per category.
    """

    def __init__(self, n_dims=2, tol=1e-8, max_iter=500, seed=0):
        self.n_dims = n_dims
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed

    def _validate(self, em: EncodedMatrix):
        if not isinstance(em, EncodedMatrix):
            raise EncodingError("expected an EncodedMatrix")
        if em.scheme != FULL_INDICATOR:
            raise EncodingError(
                f"homogeneity analysis needs full-indicator encoding, "
                f"got {em.scheme!r}"
            )
        slices = em.variable_slices()
        n, total = em.values.shape
        p = self.n_dims
        if p < 1:
            raise DataValidationError("n_dims must be >= 1")
        if p > total - len(slices):
            raise DataValidationError(
                f"n_dims={p} exceeds total categories minus variables "
                f"({total - len(slices)})"
            )
        if p > n - 1:
            raise DataValidationError(f"n_dims={p} needs at least {p + 1} rows")
        counts = em.values.sum(axis=0)
        for j, (var, cat) in enumerate(em.columns):
            if counts[j] == 0:
                raise DataValidationError(
                    f"empty category: variable {var!r}, category {cat!r}; "
                    "drop it before fitting"
                )
        return slices, counts

    def fit(self, X, y=None):
        em = X
        slices, counts = self._validate(em)
        G = em.values
        n = em.n_rows
        m = len(slices)
        p = self.n_dims

        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(0,))
        )
        # the start must satisfy the centering constraint: an uncentered
        # start rides the constant direction, which every indicator block
        # fits for free, and that understates the starting loss
        start = rng.standard_normal((n, p))
        scores = self._orthonormalize(start - start.mean(axis=0), n)

        blocks = list(slices.values())
        inv_counts = 1.0 / counts

        def centroids(x):
            # Y_j = D_j^-1 G_j' X, all variables at once.
            return (G.T @ x) * inv_counts[:, None]

        def loss(x, y):
            total = 0.0
            for sl in blocks:
                total += float(np.sum((x - G[:, sl] @ y[sl]) ** 2))
            return total

        Y = centroids(scores)
        history = [loss(scores, Y)]
        converged = False
        iterations = 0
        for it in range(1, self.max_iter + 1):
            avg = (G @ Y) / m
            scores = self._orthonormalize(avg - avg.mean(axis=0), n)
            Y = centroids(scores)
            history.append(loss(scores, Y))
            iterations = it
            prev, cur = history[-2], history[-1]
            if prev <= 0.0 or (prev - cur) <= self.tol * prev:
                converged = True
                break

        # Fix signs so each dimension's largest-|coordinate| category point
        # is positive.
        for d in range(p):
            peak = np.argmax(np.abs(Y[:, d]))
            if Y[peak, d] < 0:
                Y[:, d] *= -1.0
                scores[:, d] *= -1.0

        avg = (G @ Y) / m
        projector, *_ = np.linalg.lstsq(avg, scores, rcond=None)

        self.columns_ = em.columns
        self.variable_slices_ = slices
        self.object_scores_ = scores
        self.quantifications_ = {
            var: Y[sl].copy() for var, sl in slices.items()
        }
        self.category_counts_ = {
            var: counts[sl].astype(np.int64) for var, sl in slices.items()
        }
        self.loss_history_ = np.asarray(history)
        self.converged_ = converged
        self.n_iterations_ = iterations
        self._n_variables = m
        self._projector = projector
        return self

    @staticmethod
    def _orthonormalize(x, n):
        q, _ = np.linalg.qr(x)
        return q * np.sqrt(n)

    def fit_transform(self, X, y=None):
        return self.fit(X).object_scores_

    def transform(self, X):
        """Score rows encoded against the same columns as the fit.

        New rows are placed at their average category point and mapped
        through the fitted projection; on the training rows this reproduces
        the object scores up to convergence tolerance.
        """
        if not hasattr(self, "object_scores_"):
            raise NotFittedError("fit before transform")
        em = X
        if not isinstance(em, EncodedMatrix) or em.columns != self.columns_:
            raise EncodingError("columns do not match the fitted encoding")
        Y = np.vstack([self.quantifications_[v] for v in self.variable_slices_])
        avg = (em.values @ Y) / self._n_variables
        return avg @ self._projector

    @property
    def loss_(self):
        if not hasattr(self, "loss_history_"):
            raise NotFittedError("fit first")
        return float(self.loss_history_[-1])


def fit_homals(em: EncodedMatrix, n_dims=2, tol=1e-8, max_iter=500, seed=0):
    """Functional wrapper returning a fitted :class:`Homals`."""
    return Homals(n_dims=n_dims, tol=tol, max_iter=max_iter, seed=seed).fit(em)


@dataclass(frozen=True)
class CategoryPoint:
    variable: str
    category: str
    coords: tuple
    distance: float
    count: int
    flagged: bool


@dataclass(frozen=True)
class CategoryDiagnostics:
    """Distance-from-origin screen over all category points.

    ``flagged`` holds categories strictly beyond ``flag_multiple`` times
    the median category distance; uncertain-code categories are listed
    separately whatever their flag status, since they are the usual
    suspects behind an outlying cluster.
    """

    points: tuple[CategoryPoint, ...]
    median_distance: float
    flag_multiple: float

    @property
    def flagged(self) -> tuple[CategoryPoint, ...]:
        return tuple(pt for pt in self.points if pt.flagged)

    def uncertain_section(self, uncertain_labels) -> tuple[CategoryPoint, ...]:
        labels = set(uncertain_labels)
        return tuple(pt for pt in self.points if pt.category in labels)


def category_diagnostics(model: Homals, flag_multiple: float) -> CategoryDiagnostics:
    """Flag category points far from the origin.

    ``flag_multiple`` is the multiple of the median category distance
    beyond which a category counts as outlying; ``inf`` disables flagging.
    """
    if not hasattr(model, "quantifications_"):
        raise NotFittedError("fit before diagnostics")
    if not flag_multiple > 0:
        raise DataValidationError("flag_multiple must be positive")
    rows = []
    for var, Y in model.quantifications_.items():
        counts = model.category_counts_[var]
        _, cats = zip(*(c for c in model.columns_ if c[0] == var))
        for i, cat in enumerate(cats):
            rows.append((var, cat, Y[i], float(np.linalg.norm(Y[i])), int(counts[i])))
    median = float(np.median([r[3] for r in rows]))
    threshold = flag_multiple * median
    points = tuple(
        CategoryPoint(
            variable=var,
            category=cat,
            coords=tuple(float(v) for v in coord),
            distance=dist,
            count=count,
            flagged=bool(np.isfinite(threshold) and dist > threshold),
        )
        for var, cat, coord, dist, count in rows
    )
    return CategoryDiagnostics(
        points=points, median_distance=median, flag_multiple=float(flag_multiple)
    )
