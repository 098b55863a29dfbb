"""Experiment harness: class balancing, repeated stratified k-fold
cross-validation, metrics, paired significance tests, chi-square
representativeness checks, and the stepwise variable-group protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2
from scipy.stats import t as t_dist

from .dataset import Dataset, TargetLabelling
from .encoding import EncodedMatrix, encode
from .errors import DataValidationError, EvaluationError
from .factors import FactorAnalysis
from .homals import Homals

ORIGINAL = "original"
TRANSFORMED = "transformed"
STEP_GROUPS = {
    "step1": ("financial",),
    "step2": ("financial", "demographic"),
    "step3": ("financial", "demographic", "psychological"),
}


def _cell_seed(seed: int, repeat: int, fold: int, salt: int = 0) -> int:
    ss = np.random.SeedSequence(
        entropy=seed, spawn_key=(repeat, fold, salt)
    )
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# chi-square and undersampling

@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    max_shift: float


def chi_square_homogeneity(a, b) -> ChiSquareResult:
    """Pearson homogeneity test of two count vectors over one category set.

    Also reports the largest absolute per-category proportion difference.
    A category empty in both samples makes an expected count zero; merge
    or drop it first.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise DataValidationError(
            "need two aligned count vectors over >= 2 categories"
        )
    if (a < 0).any() or (b < 0).any():
        raise DataValidationError("counts must be nonnegative")
    na, nb = a.sum(), b.sum()
    if na == 0 or nb == 0:
        raise DataValidationError("each sample needs a positive total")
    col = a + b
    if (col == 0).any():
        dead = int(np.argmax(col == 0))
        raise DataValidationError(
            f"category {dead} is empty in both samples (expected count 0); "
            "merge it into a neighbour or drop it"
        )
    total = na + nb
    stat = 0.0
    for counts, rowsum in ((a, na), (b, nb)):
        expected = rowsum * col / total
        stat += float(np.sum((counts - expected) ** 2 / expected))
    df = len(a) - 1
    p = float(chi2.sf(stat, df)) if stat > 0 else 1.0
    shift = float(np.abs(a / na - b / nb).max())
    return ChiSquareResult(statistic=stat, df=df, p_value=p, max_shift=shift)


@dataclass(frozen=True)
class UndersampleReport:
    target_class: str
    n_before: int
    n_after: int
    per_variable: dict


def undersample(
    data: Dataset, labels: TargetLabelling, target_class: str,
    target_count: int, seed: int,
) -> tuple[Dataset, TargetLabelling, UndersampleReport]:
    """Shrink one class to ``target_count`` rows, chosen uniformly.

    All other rows are kept in place.  The report chi-square-compares each
    variable's category distribution in the kept subsample against the
    full class, after dropping categories empty in both.
    """
    y = labels.as_array()
    members = np.flatnonzero(y == target_class)
    if members.size == 0:
        raise DataValidationError(f"no rows labelled {target_class!r}")
    if target_count > members.size:
        raise DataValidationError(
            f"target_count {target_count} exceeds class size {members.size}"
        )
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(0,))
    )
    kept = np.sort(rng.choice(members, size=target_count, replace=False))
    keep_mask = np.ones(data.n_rows, dtype=bool)
    keep_mask[members] = False
    keep_mask[kept] = True

    per_variable = {}
    for var in data.schema:
        col = data.column(var.name)
        full = np.bincount(col[members], minlength=var.n_categories)
        sub = np.bincount(col[kept], minlength=var.n_categories)
        occupied = (full + sub) > 0
        if occupied.sum() < 2:
            continue
        per_variable[var.name] = chi_square_homogeneity(
            sub[occupied], full[occupied]
        )

    reduced = data.select_rows(keep_mask)
    new_labels = TargetLabelling(
        mode=labels.mode,
        labels=tuple(lab for lab, k in zip(labels.labels, keep_mask) if k),
        debt_split=labels.debt_split,
    )
    report = UndersampleReport(
        target_class=target_class,
        n_before=data.n_rows,
        n_after=reduced.n_rows,
        per_variable=per_variable,
    )
    return reduced, new_labels, report


# ---------------------------------------------------------------------------
# cross-validation plans

@dataclass(frozen=True)
class CvPlan:
    """Stratified fold assignment, one row of fold ids per repeat."""

    k: int
    repeats: int
    stratified: bool
    seed: int
    assignment: np.ndarray
    labels: np.ndarray = field(repr=False)

    @property
    def n_rows(self) -> int:
        return self.assignment.shape[1]

    @property
    def n_cells(self) -> int:
        return self.k * self.repeats

    def cells(self):
        for repeat in range(self.repeats):
            for fold in range(self.k):
                yield repeat, fold

    def split(self, repeat: int, fold: int):
        test = self.assignment[repeat] == fold
        return ~test, test


def make_cv_plan(labels, k=10, repeats=10, seed=0) -> CvPlan:
    """Stratified repeated k-fold assignment.

    Within each repeat the folds partition all rows, fold sizes differ by
    at most 1, and each class splits as evenly as the pigeonhole allows.
    Class extras go one at a time to the lightest folds, which is what
    bounds total fold-size spread by 1.
    """
    y = np.asarray(labels, dtype=object).ravel()
    n = len(y)
    if k < 2:
        raise DataValidationError("k must be >= 2")
    if repeats < 1:
        raise DataValidationError("repeats must be >= 1")
    classes = sorted(set(y))
    for cls in classes:
        size = int(np.sum(y == cls))
        if size < k:
            raise DataValidationError(
                f"class {cls!r} has {size} rows, fewer than k={k}"
            )
    assignment = np.empty((repeats, n), dtype=np.int64)
    for repeat in range(repeats):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(repeat,))
        )
        loads = np.zeros(k, dtype=np.int64)
        for cls in classes:
            members = np.flatnonzero(y == cls)
            rng.shuffle(members)
            base, extra = divmod(len(members), k)
            counts = np.full(k, base, dtype=np.int64)
            if extra:
                order = np.lexsort((np.arange(k), loads))
                counts[order[:extra]] += 1
            pos = 0
            for fold in range(k):
                assignment[repeat, members[pos:pos + counts[fold]]] = fold
                pos += counts[fold]
            loads += counts
    return CvPlan(
        k=k, repeats=repeats, stratified=True, seed=seed,
        assignment=assignment, labels=y.copy(),
    )


# ---------------------------------------------------------------------------
# metrics

@dataclass(frozen=True)
class FoldMetrics:
    repeat: int
    fold: int
    n_test: int
    accuracy: float
    sensitivity: float | None
    specificity: float | None
    recall: dict
    confusion: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class CvResult:
    """All (repeat, fold) cells of one evaluated configuration."""

    cells: tuple[FoldMetrics, ...]
    class_labels: tuple
    positive_label: object

    def accuracies(self) -> np.ndarray:
        return np.array([c.accuracy for c in self.cells])

    def summary(self) -> dict:
        acc = self.accuracies()
        out = {
            "mean_accuracy": float(acc.mean()),
            "sd_accuracy": float(acc.std(ddof=1)) if len(acc) > 1 else 0.0,
        }
        if len(self.class_labels) == 2:
            sens = np.array([c.sensitivity for c in self.cells])
            spec = np.array([c.specificity for c in self.cells])
            out["mean_sensitivity"] = float(sens.mean())
            out["mean_specificity"] = float(spec.mean())
        else:
            for lab in self.class_labels:
                vals = np.array([c.recall[lab] for c in self.cells])
                out[f"mean_recall_{lab}"] = float(vals.mean())
        return out


def _evaluate_cell(repeat, fold, predicted, y_test, class_labels, positive):
    index = {lab: i for i, lab in enumerate(class_labels)}
    c = len(class_labels)
    confusion = np.zeros((c, c), dtype=np.int64)
    for truth, pred in zip(y_test, predicted):
        confusion[index[truth], index[pred]] += 1
    n = confusion.sum()
    accuracy = float(np.trace(confusion)) / n
    recall = {}
    for lab, i in index.items():
        row = confusion[i].sum()
        recall[lab] = float(confusion[i, i] / row) if row else 0.0
    sensitivity = specificity = None
    if c == 2:
        pos = index[positive]
        neg = 1 - pos
        sensitivity = recall[class_labels[pos]]
        specificity = recall[class_labels[neg]]
    return FoldMetrics(
        repeat=repeat, fold=fold, n_test=int(n), accuracy=accuracy,
        sensitivity=sensitivity, specificity=specificity, recall=recall,
        confusion=confusion,
    )


def cross_validate(factory, X, y, plan: CvPlan, positive_label=None) -> CvResult:
    """Evaluate ``factory(seed)`` models over every plan cell.

    Each cell trains on the other k-1 folds and scores the held-out fold;
    the model (and any preprocessing it does) sees training rows only.  A
    training failure aborts with the (repeat, fold) identity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=object).ravel()
    if plan.n_rows != len(y) or (plan.labels != y).any():
        raise DataValidationError("plan was built on different labels")
    class_labels = tuple(sorted(set(y)))
    positive = class_labels[0] if positive_label is None else positive_label
    cells = []
    for repeat, fold in plan.cells():
        train, test = plan.split(repeat, fold)
        model = factory(_cell_seed(plan.seed, repeat, fold))
        try:
            model.fit(X[train], y[train])
            predicted = model.predict(X[test])
        except Exception as exc:
            raise EvaluationError(
                f"cell (repeat={repeat}, fold={fold}) failed: {exc}"
            ) from exc
        cells.append(
            _evaluate_cell(repeat, fold, predicted, y[test], class_labels, positive)
        )
    return CvResult(
        cells=tuple(cells), class_labels=class_labels, positive_label=positive,
    )


# ---------------------------------------------------------------------------
# paired t-test

@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p_value: float
    alpha: float
    significant: bool
    degenerate: bool


def paired_t_test(a, b, alpha=0.025) -> TTestResult:
    """Two-sided paired t-test on aligned metric vectors.

    All-zero differences short-circuit to p = 1 with the degenerate flag,
    covering the case of two identical models.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataValidationError("paired samples must have equal length")
    n = len(a)
    if n < 2:
        raise DataValidationError("need at least 2 pairs")
    d = a - b
    df = n - 1
    if np.all(d == 0):
        return TTestResult(
            t=0.0, df=df, p_value=1.0, alpha=alpha,
            significant=False, degenerate=True,
        )
    sd = d.std(ddof=1)
    if sd == 0:
        # equal nonzero shift in every pair: infinitely strong evidence
        return TTestResult(
            t=float(np.inf) if d[0] > 0 else float(-np.inf), df=df,
            p_value=0.0, alpha=alpha, significant=True, degenerate=False,
        )
    t = float(d.mean() / (sd / np.sqrt(n)))
    p = float(2.0 * t_dist.sf(abs(t), df))
    return TTestResult(
        t=t, df=df, p_value=p, alpha=alpha,
        significant=bool(p < alpha), degenerate=False,
    )


# ---------------------------------------------------------------------------
# stepwise variable-group protocol

@dataclass(frozen=True)
class GroupedPredictors:
    """Recipe for building the three predictor groups from a dataset.

    ``original`` encodes demographic and financial variables as
    reference-dropped indicators; ``transformed`` replaces each of those
    blocks with its homogeneity-analysis dimensions, refit inside every
    training fold.  Psychological items enter as regression factor scores
    in both variants, likewise fit per training fold.
    """

    data: Dataset
    financial: tuple
    demographic: tuple
    psychological: tuple
    variant: str = ORIGINAL
    n_factors: int = 5
    n_dims: int = 2
    homals_tol: float = 1e-6
    homals_max_iter: int = 300

    def __post_init__(self):
        object.__setattr__(self, "financial", tuple(self.financial))
        object.__setattr__(self, "demographic", tuple(self.demographic))
        object.__setattr__(self, "psychological", tuple(self.psychological))
        if self.variant not in (ORIGINAL, TRANSFORMED):
            raise DataValidationError(f"unknown variant {self.variant!r}")
        groups = (self.financial, self.demographic, self.psychological)
        if not all(groups):
            raise DataValidationError("every group needs >= 1 variable")
        flat = [n for g in groups for n in g]
        if len(set(flat)) != len(flat):
            raise DataValidationError("groups must be disjoint")
        missing = [n for n in flat if n not in self.data.schema]
        if missing:
            raise DataValidationError(f"variables not in schema: {missing}")


def _fold_features(gp: GroupedPredictors, train, test, seed):
    """Per-group (train, test) feature blocks for one CV cell."""
    out = {}
    for gname, names in (
        ("financial", gp.financial), ("demographic", gp.demographic),
    ):
        if gp.variant == ORIGINAL:
            em = encode(gp.data, list(names), "reference-dropped")
            out[gname] = (em.values[train], em.values[test])
        else:
            em = encode(gp.data, list(names), "full-indicator")
            occupied = em.values[train].sum(axis=0) > 0
            fit_em = EncodedMatrix(
                values=em.values[train][:, occupied],
                columns=tuple(c for c, o in zip(em.columns, occupied) if o),
                scheme=em.scheme,
            )
            h = Homals(
                n_dims=gp.n_dims, tol=gp.homals_tol,
                max_iter=gp.homals_max_iter, seed=seed,
            ).fit(fit_em)
            test_em = EncodedMatrix(
                values=em.values[test][:, occupied],
                columns=fit_em.columns, scheme=em.scheme,
            )
            out[gname] = (h.transform(fit_em), h.transform(test_em))
    items = encode(gp.data, list(gp.psychological), "likert-numeric")
    fa = FactorAnalysis(n_factors=gp.n_factors, seed=seed).fit(
        items.values[train]
    )
    out["psychological"] = (
        fa.model_.scores, fa.transform(items.values[test])
    )
    return out


@dataclass(frozen=True)
class StepwiseResult:
    variant: str
    steps: dict
    singles: dict
    tests: dict
    plan: CvPlan = field(repr=False)


def run_stepwise(
    gp: GroupedPredictors, families: dict, plan: CvPlan,
    alpha=0.025, positive_label=None, singles=True,
) -> StepwiseResult:
    """The cumulative variable-group protocol.

    Evaluates each family on financial variables alone (step1), plus
    demographics (step2), plus psychological factors (step3), with every
    single-group baseline when ``singles`` is set.  One plan is shared by
    all configurations so the step3-vs-step2 accuracy test pairs fold for
    fold.  ``families`` maps a family name to a ``factory(seed)`` callable.
    """
    y = plan.labels
    if plan.n_rows != gp.data.n_rows:
        raise DataValidationError("plan does not cover the dataset rows")
    class_labels = tuple(sorted(set(y)))
    positive = class_labels[0] if positive_label is None else positive_label

    step_cells = {
        (step, fam): [] for step in STEP_GROUPS for fam in families
    }
    single_cells = {}
    if singles:
        single_cells = {
            (group, fam): []
            for group in ("financial", "demographic", "psychological")
            for fam in families
        }

    for repeat, fold in plan.cells():
        train, test = plan.split(repeat, fold)
        feat_seed = _cell_seed(plan.seed, repeat, fold, salt=1)
        features = _fold_features(gp, train, test, feat_seed)
        runs = [(("step", step), groups) for step, groups in STEP_GROUPS.items()]
        if singles:
            runs += [
                (("single", group), (group,))
                for group in ("financial", "demographic", "psychological")
            ]
        for (kind, name), groups in runs:
            X_train = np.hstack([features[g][0] for g in groups])
            X_test = np.hstack([features[g][1] for g in groups])
            for fam, factory in families.items():
                model = factory(_cell_seed(plan.seed, repeat, fold))
                try:
                    model.fit(X_train, y[train])
                    predicted = model.predict(X_test)
                except Exception as exc:
                    raise EvaluationError(
                        f"{name}/{fam} cell (repeat={repeat}, fold={fold}) "
                        f"failed: {exc}"
                    ) from exc
                metrics = _evaluate_cell(
                    repeat, fold, predicted, y[test], class_labels, positive
                )
                if kind == "step":
                    step_cells[(name, fam)].append(metrics)
                else:
                    single_cells[(name, fam)].append(metrics)

    def pack(cells_by_key):
        out = {}
        for (name, fam), cells in cells_by_key.items():
            out.setdefault(name, {})[fam] = CvResult(
                cells=tuple(cells), class_labels=class_labels,
                positive_label=positive,
            )
        return out

    steps = pack(step_cells)
    tests = {
        fam: paired_t_test(
            steps["step3"][fam].accuracies(),
            steps["step2"][fam].accuracies(),
            alpha=alpha,
        )
        for fam in families
    }
    return StepwiseResult(
        variant=gp.variant, steps=steps,
        singles=pack(single_cells) if singles else {},
        tests=tests, plan=plan,
    )
