"""Shared test fixtures and independent oracles.

The oracles here deliberately avoid the code paths they check: the
homogeneity-analysis subspace comes from a dense eigendecomposition of the
average category projector, factor recovery is judged by Tucker congruence
after optimal column matching, and gradients are compared against central
finite differences.
"""

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from debtminer import (
    Dataset,
    EncodedMatrix,
    SurveySchema,
    VariableSpec,
    encode,
)


# ---------------------------------------------------------------------------
# homogeneity-analysis oracle


def average_projector_subspace(em: EncodedMatrix, p: int):
    """Top-p eigenpairs of the centered average category projector.

    The optimal object scores span the leading eigenvectors of
    S = (1/m) sum_j G_j D_j^-1 G_j', restricted to the centered subspace.
    Returns (orthonormal basis n x p, eigengap between ranks p and p+1).
    """
    G = em.values
    n = G.shape[0]
    m = len(em.variable_slices())
    counts = G.sum(axis=0)
    S = (G / counts) @ G.T / m
    C = np.eye(n) - 1.0 / n
    w, V = np.linalg.eigh(C @ S @ C)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    return V[:, :p], float(w[p - 1] - w[p])


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Angles between the column spans of two full-rank matrices."""
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    svals = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.arccos(np.clip(svals, -1.0, 1.0))


def random_indicator_instance(seed: int, max_vars=8, max_rows=40):
    """Small random survey block, full-indicator encoded.

    Every category is guaranteed at least one member so the block is
    fittable without preprocessing.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, max_vars + 1))
    n = int(rng.integers(12, max_rows + 1))
    variables = []
    codes = []
    for j in range(m):
        k = int(rng.integers(2, 5))
        cats = tuple(f"c{i}" for i in range(k))
        variables.append(VariableSpec(f"v{j}", "categorical", "demographic", cats))
        col = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
        rng.shuffle(col)
        codes.append(col)
    variables.append(VariableSpec("debt", "numeric-band", "target", ("no", "yes")))
    codes.append(rng.integers(0, 2, n))
    schema = SurveySchema(tuple(variables))
    data = Dataset(
        schema=schema,
        codes=np.column_stack(codes),
        row_ids=tuple(str(i + 1) for i in range(n)),
    )
    return encode(data, [f"v{j}" for j in range(m)], "full-indicator")


# ---------------------------------------------------------------------------
# factor-recovery oracle


def tucker_congruence(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(a @ b) / np.sqrt((a @ a) * (b @ b)))


def match_columns(estimated: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-factor congruence after the best column permutation and signs."""
    m = truth.shape[1]
    cost = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            cost[i, j] = -tucker_congruence(estimated[:, j], truth[:, i])
    rows, cols = linear_sum_assignment(cost)
    return np.array([-cost[i, j] for i, j in zip(rows, cols)])


def planted_loading_matrix(p=12, m=3, pattern=(0.8, 0.7, 0.6, 0.5)):
    """Block simple-structure loadings, one factor per contiguous block."""
    L = np.zeros((p, m))
    for f, block in enumerate(np.array_split(np.arange(p), m)):
        for pos, i in enumerate(block):
            L[i, f] = pattern[pos % len(pattern)]
    return L


# ---------------------------------------------------------------------------
# gradient oracle


def norm_scaled_error(fd, g) -> float:
    """Worst entrywise gap, scaled by the larger gradient magnitude.

    Entrywise relative error is ill-posed where an entry is near zero
    (finite-difference roundoff dominates), so the gap is judged on the
    scale of the whole gradient.
    """
    fd = np.asarray(fd, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    return float(
        np.abs(fd - g).max() / max(np.abs(fd).max(), np.abs(g).max(), 1e-12)
    )


def central_differences(f, W: np.ndarray, h: float, mask=None) -> np.ndarray:
    """Central finite differences of scalar f over the entries of W."""
    fd = np.zeros_like(W, dtype=np.float64)
    it = np.nditer(W, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        if mask is None or mask[idx]:
            Wp = W.copy()
            Wm = W.copy()
            Wp[idx] += h
            Wm[idx] -= h
            fd[idx] = (f(Wp) - f(Wm)) / (2.0 * h)
        it.iternext()
    return fd


# ---------------------------------------------------------------------------
# shared data


def xor_labels(X: np.ndarray) -> np.ndarray:
    bits = X.astype(np.int64)
    return np.where((bits[:, 0] ^ bits[:, 1]) == 1, "odd", "even").astype(object)


@pytest.fixture
def xor_data():
    rng = np.random.default_rng(42)
    X = rng.integers(0, 2, size=(400, 2)).astype(np.float64)
    return X, xor_labels(X)


@pytest.fixture
def small_schema():
    return SurveySchema(
        (
            VariableSpec(
                "housing", "categorical", "demographic",
                ("own", "rent", "other", "uncertain"), ("uncertain",),
            ),
            VariableSpec(
                "income", "numeric-band", "financial",
                ("low", "mid", "high", "uncertain"), ("uncertain",),
            ),
            VariableSpec(
                "savings", "numeric-band", "financial",
                ("none", "some", "plenty", "uncertain"), ("uncertain",),
            ),
            VariableSpec("mood", "likert", "psychological",
                         ("1", "2", "3", "4", "5")),
            VariableSpec("debt_band", "numeric-band", "target",
                         ("none", "under_1k", "1k_5k", "over_5k")),
        )
    )


@pytest.fixture
def small_data(small_schema):
    rng = np.random.default_rng(5)
    n = 40
    codes = np.column_stack(
        [
            rng.integers(0, 3, n),
            rng.integers(0, 3, n),
            rng.integers(0, 3, n),
            rng.integers(0, 5, n),
            rng.integers(0, 4, n),
        ]
    )
    # rows 0 and 1 answer uncertainly on everything watched
    codes[0, :3] = 3
    codes[1, :3] = 3
    # row 2 only on one variable
    codes[2, 0] = 3
    return Dataset(
        schema=small_schema,
        codes=codes,
        row_ids=tuple(str(i + 1) for i in range(n)),
    )
