"""Random forest of CART trees with Gini importance.

Trees grow on bootstrap resamples; each node draws ``mtry`` candidate
predictors and takes the split with the largest count-weighted decrease in
Gini impurity.  Importance per predictor is that decrease summed over a
tree's splits and averaged over trees.  Growth and prediction are compiled
kernels; all randomness flows from one seed through per-tree streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..errors import DataValidationError
from .logistic import _check_training

_GAIN_EPS = 1e-12


@njit(cache=True)
def _grow_tree(X, y_idx, n_classes, mtry, min_leaf, bootstrap, tree_seed):
    n, d = X.shape
    np.random.seed(tree_seed)
    inbag = np.zeros(n, np.int64)
    order = np.empty(n, np.int64)
    if bootstrap:
        for i in range(n):
            r = np.random.randint(0, n)
            order[i] = r
            inbag[r] += 1
    else:
        for i in range(n):
            order[i] = i
            inbag[i] = 1

    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    leaf_label = np.full(max_nodes, -1, np.int64)
    importance = np.zeros(d, np.float64)

    stack_node = np.empty(max_nodes, np.int64)
    stack_start = np.empty(max_nodes, np.int64)
    stack_end = np.empty(max_nodes, np.int64)
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    top = 1
    n_nodes = 1

    counts = np.zeros(n_classes, np.int64)
    left_counts = np.zeros(n_classes, np.int64)
    perm = np.empty(d, np.int64)

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        m = end - start

        for k in range(n_classes):
            counts[k] = 0
        for t in range(start, end):
            counts[y_idx[order[t]]] += 1
        majority = 0
        for k in range(1, n_classes):
            if counts[k] > counts[majority]:
                majority = k
        sq = 0.0
        for k in range(n_classes):
            sq += counts[k] * counts[k]
        node_gini = 1.0 - sq / (m * m)

        if node_gini == 0.0 or m < 2 * min_leaf:
            leaf_label[node] = majority
            continue

        for j in range(d):
            perm[j] = j
        for j in range(mtry):
            r = j + np.random.randint(0, d - j)
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp
        chosen = np.sort(perm[:mtry])

        best_gain = _GAIN_EPS
        best_f = -1
        best_thr = 0.0
        vals = np.empty(m, np.float64)
        for jj in range(mtry):
            f = chosen[jj]
            for t in range(m):
                vals[t] = X[order[start + t], f]
            sort_idx = np.argsort(vals, kind="mergesort")
            for k in range(n_classes):
                left_counts[k] = 0
            # walk ascending values; a boundary between distinct values
            # is a candidate threshold at their midpoint
            for t in range(m - 1):
                row = order[start + sort_idx[t]]
                left_counts[y_idx[row]] += 1
                if vals[sort_idx[t]] == vals[sort_idx[t + 1]]:
                    continue
                m_left = t + 1
                m_right = m - m_left
                if m_left < min_leaf or m_right < min_leaf:
                    continue
                sq_l = 0.0
                sq_r = 0.0
                for k in range(n_classes):
                    sq_l += left_counts[k] * left_counts[k]
                    cr = counts[k] - left_counts[k]
                    sq_r += cr * cr
                gini_l = 1.0 - sq_l / (m_left * m_left)
                gini_r = 1.0 - sq_r / (m_right * m_right)
                gain = m * node_gini - m_left * gini_l - m_right * gini_r
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = (vals[sort_idx[t]] + vals[sort_idx[t + 1]]) / 2.0

        if best_f < 0:
            leaf_label[node] = majority
            continue

        importance[best_f] += best_gain
        # stable partition keeps within-side order deterministic
        buf = np.empty(m, np.int64)
        n_left = 0
        for t in range(start, end):
            if X[order[t], best_f] <= best_thr:
                buf[n_left] = order[t]
                n_left += 1
        n_right = n_left
        for t in range(start, end):
            if X[order[t], best_f] > best_thr:
                buf[n_right] = order[t]
                n_right += 1
        for t in range(m):
            order[start + t] = buf[t]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes + 1
        stack_start[top] = start + n_left
        stack_end[top] = end
        top += 1
        stack_node[top] = n_nodes
        stack_start[top] = start
        stack_end[top] = start + n_left
        top += 1
        n_nodes += 2

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        leaf_label[:n_nodes],
        importance,
        inbag,
    )


@njit(cache=True)
def _forest_votes(X, feature, threshold, left, right, leaf_label, offsets,
                  n_classes, inbag, oob_only):
    n = X.shape[0]
    n_trees = len(offsets) - 1
    votes = np.zeros((n, n_classes), np.int64)
    for t in range(n_trees):
        base = offsets[t]
        for i in range(n):
            if oob_only and inbag[t, i] > 0:
                continue
            node = 0
            while leaf_label[base + node] < 0:
                if X[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            votes[i, leaf_label[base + node]] += 1
    return votes


class RandomForest(BaseEstimator, ClassifierMixin):
    """Bootstrap ensemble of Gini-split CART trees.

    Parameters
    ----------
    n_trees : int
    mtry : int or None
        Candidate predictors per node; None means floor(sqrt(d)).
    min_leaf : int
        Minimum rows on each side of a split.
    bootstrap : bool
        Resample rows per tree; disabling it with ``n_trees=1`` gives the
        plain decision tree.
    seed : int

    Attributes
    ----------
    feature_importances_ : ndarray
        Mean over trees of the summed Gini decrease per predictor.
    oob_score_ : float or None
        Out-of-bag accuracy (bootstrap fits only).
    """

    def __init__(self, n_trees=500, mtry=None, min_leaf=1, bootstrap=True,
                 seed=0):
        self.n_trees = n_trees
        self.mtry = mtry
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, X, y):
        X, y_idx, classes = _check_training(X, y)
        n, d = X.shape
        if self.n_trees < 1:
            raise DataValidationError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise DataValidationError("min_leaf must be >= 1")
        if self.min_leaf >= n:
            raise DataValidationError(
                f"min_leaf={self.min_leaf} leaves nothing to split with "
                f"{n} rows"
            )
        mtry = int(np.floor(np.sqrt(d))) if self.mtry is None else self.mtry
        if not 1 <= mtry <= d:
            raise DataValidationError(f"mtry must be in 1..{d}")
        X = np.ascontiguousarray(X)

        parts = []
        importance = np.zeros(d)
        inbag = np.zeros((self.n_trees, n), dtype=np.int64)
        for t in range(self.n_trees):
            tree_seed = int(
                np.random.SeedSequence(
                    entropy=self.seed, spawn_key=(t,)
                ).generate_state(1)[0]
            )
            out = _grow_tree(
                X, y_idx, len(classes), mtry, self.min_leaf,
                self.bootstrap, tree_seed,
            )
            parts.append(out[:5])
            importance += out[5]
            inbag[t] = out[6]

        offsets = np.zeros(self.n_trees + 1, dtype=np.int64)
        for t, part in enumerate(parts):
            offsets[t + 1] = offsets[t] + len(part[0])
        self.classes_ = classes
        self.mtry_ = mtry
        self.features_ = np.concatenate([p[0] for p in parts])
        self.thresholds_ = np.concatenate([p[1] for p in parts])
        self.lefts_ = np.concatenate([p[2] for p in parts])
        self.rights_ = np.concatenate([p[3] for p in parts])
        self.leaves_ = np.concatenate([p[4] for p in parts])
        self.offsets_ = offsets
        self.feature_importances_ = importance / self.n_trees
        self._inbag = inbag

        if self.bootstrap:
            votes = self._votes(X, oob_only=True)
            covered = votes.sum(axis=1) > 0
            if covered.any():
                picks = np.argmax(votes[covered], axis=1)
                self.oob_score_ = float(np.mean(picks == y_idx[covered]))
            else:
                self.oob_score_ = None
        else:
            self.oob_score_ = None
        return self

    def _votes(self, X, oob_only=False):
        return _forest_votes(
            np.ascontiguousarray(X, dtype=np.float64),
            self.features_, self.thresholds_, self.lefts_, self.rights_,
            self.leaves_, self.offsets_, len(self.classes_), self._inbag,
            oob_only,
        )

    def predict_proba(self, X):
        if not hasattr(self, "offsets_"):
            raise NotFittedError("fit before predict")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_importances_):
            raise DataValidationError("wrong predictor count")
        votes = self._votes(X)
        return votes / votes.sum(axis=1, keepdims=True)

    def predict(self, X):
        picks = np.argmax(self.predict_proba(X), axis=1)
        return np.asarray([self.classes_[i] for i in picks], dtype=object)


def train_random_forest(X, y, n_trees=500, mtry=None, min_leaf=1,
                        bootstrap=True, seed=0):
    """Functional wrapper returning a fitted :class:`RandomForest`."""
    return RandomForest(
        n_trees=n_trees, mtry=mtry, min_leaf=min_leaf, bootstrap=bootstrap,
        seed=seed,
    ).fit(X, y)


@dataclass(frozen=True)
class GiniImportance:
    """Per-predictor mean decrease in Gini impurity, with the six-number
    descriptive row (min, Q1, median, mean, Q3, max)."""

    names: tuple[str, ...]
    values: np.ndarray

    def descriptive_row(self) -> tuple:
        v = self.values
        q1, med, q3 = np.quantile(v, (0.25, 0.5, 0.75))
        return (
            float(v.min()), float(q1), float(med), float(v.mean()),
            float(q3), float(v.max()),
        )

    def ranking(self) -> list:
        order = np.argsort(-self.values, kind="stable")
        return [(self.names[i], float(self.values[i])) for i in order]


def gini_importance(model, names=None) -> GiniImportance:
    """Importance report for a fitted forest."""
    if not isinstance(model, RandomForest):
        raise DataValidationError("gini importance needs a random forest")
    if not hasattr(model, "feature_importances_"):
        raise NotFittedError("fit the forest first")
    values = model.feature_importances_
    if names is None:
        names = tuple(f"x{i + 1}" for i in range(len(values)))
    if len(names) != len(values):
        raise DataValidationError("name count does not match predictors")
    return GiniImportance(names=tuple(names), values=values.copy())
