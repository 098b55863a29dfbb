"""Exploratory factor analysis of the likert battery.

Pearson correlations, scree eigenvalues, parallel analysis for factor
retention, iterated principal-axis extraction, varimax rotation,
regression factor scores, and Cronbach's alpha reliability banding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .encoding import LIKERT_NUMERIC, EncodedMatrix
from .errors import DataValidationError, NumericalError

BAND_GOOD = "good"
BAND_ACCEPTABLE = "acceptable"
BAND_POOR = "poor"
BAND_UNACCEPTABLE = "unacceptable"


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    items: tuple[str, ...]

    def __post_init__(self):
        R = np.asarray(self.values, dtype=np.float64)
        R.setflags(write=False)
        object.__setattr__(self, "values", R)
        object.__setattr__(self, "items", tuple(self.items))
        p = len(self.items)
        if R.shape != (p, p):
            raise DataValidationError("correlation matrix shape mismatch")
        if np.abs(R - R.T).max() > 1e-12:
            raise DataValidationError("correlation matrix must be symmetric")
        if np.abs(np.diag(R) - 1.0).max() > 0:
            raise DataValidationError("correlation diagonal must be exactly 1")
        if np.linalg.eigvalsh(R).min() < -1e-8:
            raise DataValidationError(
                "correlation matrix is not positive semidefinite"
            )

    @property
    def p(self) -> int:
        return len(self.items)


def _item_values(items) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(items, EncodedMatrix):
        if items.scheme != LIKERT_NUMERIC:
            raise DataValidationError(
                "expected likert-numeric scores, got "
                f"{items.scheme!r} encoding"
            )
        return items.values, tuple(v for v, _ in items.columns)
    values = np.asarray(items, dtype=np.float64)
    if values.ndim != 2:
        raise DataValidationError("item matrix must be 2-D")
    return values, tuple(f"item{i + 1}" for i in range(values.shape[1]))


def correlation(items) -> CorrelationMatrix:
    """Pearson correlations of the item columns.

    Accepts a likert-numeric ``EncodedMatrix`` or a plain numeric matrix.
    A constant item is an error naming the item.
    """
    values, names = _item_values(items)
    if values.shape[1] < 2:
        raise DataValidationError("need at least 2 items")
    sd = values.std(axis=0)
    dead = np.flatnonzero(sd == 0)
    if dead.size:
        raise DataValidationError(
            f"zero-variance item: {names[dead[0]]!r}"
        )
    R = np.corrcoef(values, rowvar=False)
    R = (R + R.T) / 2.0
    np.fill_diagonal(R, 1.0)
    return CorrelationMatrix(values=R, items=names)


def scree(R: CorrelationMatrix) -> np.ndarray:
    """All eigenvalues of R, descending."""
    return np.linalg.eigvalsh(R.values)[::-1].copy()


@dataclass(frozen=True)
class ParallelAnalysisResult:
    retained: int
    observed: np.ndarray
    mean_random: np.ndarray
    n_random: int


def parallel_analysis(items, n_random=100, seed=0) -> ParallelAnalysisResult:
    """Retention count by comparison against random-data eigenvalues.

    Draws ``n_random`` standard-normal datasets of the observed shape,
    averages their correlation eigenvalues per rank, and retains leading
    factors while the observed eigenvalue beats the random mean at the
    same rank.  Each replicate derives its stream from (seed, replicate),
    so results do not depend on evaluation order.
    """
    if n_random < 20:
        raise DataValidationError("n_random must be >= 20")
    values, _ = _item_values(items)
    n, p = values.shape
    observed = scree(correlation(values))
    total = np.zeros(p)
    for r in range(n_random):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(r,))
        )
        noise = rng.standard_normal((n, p))
        total += np.linalg.eigvalsh(np.corrcoef(noise, rowvar=False))[::-1]
    mean_random = total / n_random
    retained = 0
    for obs, ref in zip(observed, mean_random):
        if obs <= ref:
            break
        retained += 1
    return ParallelAnalysisResult(
        retained=retained,
        observed=observed,
        mean_random=mean_random,
        n_random=n_random,
    )


@dataclass(frozen=True)
class FactorModel:
    """Extraction (and optionally rotation) result.

    ``loadings`` is items x factors; ``eigenvalues`` are those of the full
    correlation matrix, descending; ``variance_explained`` is the summed
    communality share of total variance.
    """

    items: tuple[str, ...]
    m: int
    loadings: np.ndarray
    eigenvalues: np.ndarray
    communalities: np.ndarray
    variance_explained: float
    rotation: str
    converged: bool
    heywood: bool
    scores: np.ndarray | None = field(default=None, repr=False)

    def item_assignment(self) -> dict:
        """Item -> factor index, by largest absolute loading."""
        picks = np.argmax(np.abs(self.loadings), axis=1)
        return {name: int(f) for name, f in zip(self.items, picks)}

    def assignment_groups(self) -> dict:
        """Factor index -> item names, from :meth:`item_assignment`."""
        groups: dict[int, list] = {f: [] for f in range(self.m)}
        for name, f in self.item_assignment().items():
            groups[f].append(name)
        return groups

    def negative_items(self) -> list:
        """Items loading negatively on their assigned factor."""
        out = []
        for i, name in enumerate(self.items):
            f = int(np.argmax(np.abs(self.loadings[i])))
            if self.loadings[i, f] < 0:
                out.append(name)
        return out


def extract_factors(
    R: CorrelationMatrix, m: int, max_iter=200, tol=1e-6
) -> FactorModel:
    """Iterated principal-axis factoring.

    Communalities start at squared multiple correlations, the reduced
    matrix is eigendecomposed, and communalities are re-estimated from the
    loadings until they settle within ``tol``.  A communality pinned at 1
    is recorded as a Heywood case.
    """
    p = R.p
    if not 1 <= m < p:
        raise DataValidationError(f"factor count must be in 1..{p - 1}")
    full_eigs = scree(R)
    Rv = R.values

    try:
        inv_diag = np.diag(np.linalg.inv(Rv))
        h2 = 1.0 - 1.0 / inv_diag
    except np.linalg.LinAlgError:
        h2 = 1.0 - 1.0 / np.diag(np.linalg.inv(Rv + 1e-8 * np.eye(p)))
    h2 = np.clip(h2, 0.0, 1.0)

    loadings = np.zeros((p, m))
    converged = False
    heywood = False
    for _ in range(max_iter):
        reduced = Rv.copy()
        np.fill_diagonal(reduced, h2)
        w, V = np.linalg.eigh(reduced)
        idx = np.argsort(w)[::-1][:m]
        loadings = V[:, idx] * np.sqrt(np.clip(w[idx], 0.0, None))
        new_h2 = np.sum(loadings**2, axis=1)
        if np.any(new_h2 >= 1.0):
            heywood = True
            new_h2 = np.clip(new_h2, 0.0, 1.0)
        if np.abs(new_h2 - h2).max() < tol:
            h2 = new_h2
            converged = True
            break
        h2 = new_h2

    loadings = _canonical_columns(loadings)
    return FactorModel(
        items=R.items,
        m=m,
        loadings=loadings,
        eigenvalues=full_eigs,
        communalities=h2,
        variance_explained=float(h2.sum() / p),
        rotation="none",
        converged=converged,
        heywood=heywood,
    )


def _canonical_columns(loadings: np.ndarray) -> np.ndarray:
    """Order columns by explained variance, point peak loadings up."""
    out = loadings.copy()
    order = np.argsort(-np.sum(out**2, axis=0), kind="stable")
    out = out[:, order]
    for f in range(out.shape[1]):
        peak = np.argmax(np.abs(out[:, f]))
        if out[peak, f] < 0:
            out[:, f] *= -1.0
    return out


def varimax_criterion(loadings: np.ndarray) -> float:
    """Raw varimax objective: summed column variance of squared loadings."""
    sq = np.asarray(loadings) ** 2
    p = sq.shape[0]
    return float(np.sum(sq**2) / p - np.sum((sq.sum(axis=0) / p) ** 2))


def varimax(model: FactorModel, tol=1e-12, max_sweeps=200) -> FactorModel:
    """Orthogonal varimax rotation by pairwise planar rotations.

    Each pair of factors is rotated through the closed-form optimal angle;
    sweeps repeat until the criterion gain falls below ``tol``.  With one
    factor the model is returned unchanged.
    """
    if model.m == 1:
        return model
    L = model.loadings.copy()
    p = L.shape[0]
    crit = varimax_criterion(L)
    for _ in range(max_sweeps):
        for a in range(model.m - 1):
            for b in range(a + 1, model.m):
                u = L[:, a] ** 2 - L[:, b] ** 2
                v = 2.0 * L[:, a] * L[:, b]
                A, B = u.sum(), v.sum()
                C = float(u @ u - v @ v)
                D = 2.0 * float(u @ v)
                num = D - 2.0 * A * B / p
                den = C - (A**2 - B**2) / p
                phi = 0.25 * np.arctan2(num, den)
                if abs(phi) < 1e-15:
                    continue
                c, s = np.cos(phi), np.sin(phi)
                La = c * L[:, a] + s * L[:, b]
                Lb = -s * L[:, a] + c * L[:, b]
                L[:, a], L[:, b] = La, Lb
        new_crit = varimax_criterion(L)
        if new_crit - crit < tol:
            break
        crit = new_crit
    L = _canonical_columns(L)
    h2 = np.sum(L**2, axis=1)
    return replace(
        model,
        loadings=L,
        communalities=h2,
        variance_explained=float(h2.sum() / len(h2)),
        rotation="varimax",
        scores=None,
    )


def factor_scores(model: FactorModel, items) -> np.ndarray:
    """Regression-method factor scores F = Z R^-1 L.

    Items are standardized against their own sample; a 1e-8 ridge rescues
    a near-singular correlation matrix, anything worse is an error.
    """
    values, names = _item_values(items)
    if len(names) != len(model.items):
        raise DataValidationError("item set does not match the model")
    R = correlation(values).values
    Z = (values - values.mean(axis=0)) / values.std(axis=0)
    try:
        weights = np.linalg.solve(R, model.loadings)
    except np.linalg.LinAlgError:
        weights = None
    if weights is None or not np.isfinite(weights).all():
        bumped = R + 1e-8 * np.eye(R.shape[0])
        try:
            weights = np.linalg.solve(bumped, model.loadings)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "correlation matrix is singular beyond ridge rescue"
            ) from None
        if not np.isfinite(weights).all():
            raise NumericalError(
                "correlation matrix is singular beyond ridge rescue"
            )
    return Z @ weights


def band_alpha(alpha: float) -> str:
    if alpha > 0.7:
        return BAND_GOOD
    if alpha > 0.6:
        return BAND_ACCEPTABLE
    if alpha > 0.5:
        return BAND_POOR
    return BAND_UNACCEPTABLE


@dataclass(frozen=True)
class FactorReliability:
    factor: str
    alpha: float
    items: tuple[str, ...]
    band: str


@dataclass(frozen=True)
class ReliabilityReport:
    entries: tuple[FactorReliability, ...]

    def by_factor(self) -> dict:
        return {e.factor: e for e in self.entries}


def cronbach_alpha(items, assignment: dict) -> ReliabilityReport:
    """Internal consistency per item group.

    ``assignment`` maps a factor name to its item names; every group needs
    at least two items.  Items expected to run against their factor should
    be reverse-coded before calling (see :func:`reverse_code`).
    """
    values, names = _item_values(items)
    index = {n: i for i, n in enumerate(names)}
    entries = []
    for factor, group in assignment.items():
        group = tuple(group)
        if len(group) < 2:
            raise DataValidationError(
                f"factor {factor!r} needs >= 2 items for alpha"
            )
        missing = [g for g in group if g not in index]
        if missing:
            raise DataValidationError(f"unknown items {missing}")
        block = values[:, [index[g] for g in group]]
        total_var = block.sum(axis=1).var(ddof=1)
        if total_var <= 0:
            raise DataValidationError(
                f"factor {factor!r}: zero total variance"
            )
        k = len(group)
        alpha = k / (k - 1) * (1.0 - block.var(axis=0, ddof=1).sum() / total_var)
        entries.append(
            FactorReliability(
                factor=factor, alpha=float(alpha), items=group,
                band=band_alpha(float(alpha)),
            )
        )
    return ReliabilityReport(entries=tuple(entries))


def reverse_code(items: EncodedMatrix, names) -> EncodedMatrix:
    """Flip the given centered likert columns; applying twice is identity."""
    if items.scheme != LIKERT_NUMERIC:
        raise DataValidationError("reverse coding needs likert-numeric scores")
    flip = set(names)
    unknown = flip - {v for v, _ in items.columns}
    if unknown:
        raise DataValidationError(f"unknown items {sorted(unknown)}")
    values = items.values.copy()
    for j, (var, _) in enumerate(items.columns):
        if var in flip:
            values[:, j] = -values[:, j]
    return EncodedMatrix(values=values, columns=items.columns, scheme=items.scheme)


class FactorAnalysis(BaseEstimator, TransformerMixin):
    """Estimator wrapper: correlate, retain, extract, rotate, score.

    ``n_factors=None`` retains by parallel analysis; an integer pins the
    count.  ``transform`` returns regression factor scores.
    """

    def __init__(self, n_factors=None, rotation="varimax", n_random=100,
                 tol=1e-6, max_iter=200, seed=0):
        self.n_factors = n_factors
        self.rotation = rotation
        self.n_random = n_random
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, X, y=None):
        if self.rotation not in ("none", "varimax"):
            raise DataValidationError(f"unknown rotation {self.rotation!r}")
        values, _ = _item_values(X)
        R = correlation(X)
        if self.n_factors is None:
            pa = parallel_analysis(X, n_random=self.n_random, seed=self.seed)
            m = max(pa.retained, 1)
            self.parallel_ = pa
        else:
            m = int(self.n_factors)
            self.parallel_ = None
        model = extract_factors(R, m, max_iter=self.max_iter, tol=self.tol)
        if self.rotation == "varimax":
            model = varimax(model)
        # Scoring weights frozen at fit time so new rows are standardized
        # and weighted by the training sample only.
        self.mean_ = values.mean(axis=0)
        self.sd_ = values.std(axis=0)
        try:
            self.weights_ = np.linalg.solve(R.values, model.loadings)
        except np.linalg.LinAlgError:
            self.weights_ = np.linalg.solve(
                R.values + 1e-8 * np.eye(R.p), model.loadings
            )
        scores = ((values - self.mean_) / self.sd_) @ self.weights_
        self.correlation_ = R
        self.model_ = replace(model, scores=scores)
        return self

    def transform(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("fit before transform")
        values, _ = _item_values(X)
        if values.shape[1] != len(self.model_.items):
            raise DataValidationError("item set does not match the fit")
        return ((values - self.mean_) / self.sd_) @ self.weights_

    def fit_transform(self, X, y=None):
        return self.fit(X).model_.scores
