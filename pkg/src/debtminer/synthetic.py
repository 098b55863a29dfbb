"""Synthetic survey generator.

Produces a coded dataset with the shape of a consumer-indebtedness survey:
demographic and financial categoricals, a likert battery driven by planted
latent factors, and a banded debt target drawn from a logistic model over
the group effects.  Ground truth (loadings, coefficients, factor scores,
planted non-responders) is returned alongside so recovery can be tested.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import multivariate_normal, norm

from .dataset import Dataset
from .errors import DataValidationError
from .schema import SurveySchema, VariableSpec

UNCERTAIN_LABEL = "uncertain"


@dataclass(frozen=True)
class CatalogVariable:
    """One demographic or financial variable of the generated survey.

    ``socio_weight`` correlates the variable's ordered bands with a shared
    socioeconomic latent; ``debt_coef`` is its slope (per centered band
    step) in the debt logit.  ``with_uncertain`` appends an uncertain
    category that only planted or sporadic non-response can select.
    """

    name: str
    kind: str
    labels: tuple[str, ...]
    socio_weight: float = 0.0
    debt_coef: float = 0.0
    with_uncertain: bool = True

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not -1.0 < self.socio_weight < 1.0:
            raise DataValidationError(
                f"{self.name}: socio_weight must lie in (-1, 1)"
            )
        if len(self.labels) < 2:
            raise DataValidationError(f"{self.name}: need >= 2 categories")


DEFAULT_DEMOGRAPHIC = (
    CatalogVariable(
        "house_status", "categorical",
        ("own_outright", "mortgage", "rent", "other"),
        socio_weight=0.50, debt_coef=0.40,
    ),
    CatalogVariable(
        "marital_status", "categorical",
        ("single", "married", "divorced", "widowed"),
    ),
    CatalogVariable(
        "employment", "categorical",
        ("employed", "self_employed", "retired", "unemployed"),
        socio_weight=0.45, debt_coef=0.35,
    ),
    CatalogVariable(
        "education", "categorical",
        ("basic", "secondary", "vocational", "degree"),
        socio_weight=0.40, debt_coef=-0.30,
    ),
    CatalogVariable(
        "age_band", "numeric-band",
        ("18_29", "30_44", "45_59", "60_plus"),
        debt_coef=-0.20, with_uncertain=False,
    ),
)

DEFAULT_FINANCIAL = (
    CatalogVariable(
        "household_income", "numeric-band",
        ("low", "lower_mid", "upper_mid", "high"),
        socio_weight=0.60, debt_coef=-0.50,
    ),
    CatalogVariable(
        "personal_income", "numeric-band",
        ("low", "lower_mid", "upper_mid", "high"),
        socio_weight=0.55, debt_coef=-0.35,
    ),
    CatalogVariable(
        "savings", "numeric-band",
        ("none", "small", "moderate", "large"),
        socio_weight=0.50, debt_coef=-0.45,
    ),
)

DEBT_BAND_LABELS = ("none", "under_1k", "1k_5k", "5k_20k", "over_20k")


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the synthetic survey.

    Parameters
    ----------
    n_rows : int
        Households to generate.
    n_factors, n_items : int
        Planted latent factors and likert items.  Items are assigned to
        factors in near-equal contiguous blocks.
    loading_pattern : tuple of float
        Loading magnitudes cycled through within each factor's block.
    likert_points : int
        Points on the agreement scale.
    factor_debt_coef : tuple of float
        Per-factor slopes in the debt logit (padded/truncated to
        ``n_factors``).
    debt_intercept : float
        Logit intercept; 0 gives roughly balanced debt/no-debt.
    level_noise : float
        Noise scale of the latent that assigns in-debt rows to debt bands.
    nonresponse_fraction : float
        Fraction of rows planted as systematic non-responders: they answer
        the uncertain code on every variable that has one.
    sporadic_uncertain_rate : float
        Independent per-cell chance of an uncertain answer outside the
        planted rows.
    """

    n_rows: int = 2000
    n_factors: int = 5
    n_items: int = 28
    loading_pattern: tuple = (0.75, 0.60, 0.55, 0.50, 0.45)
    likert_points: int = 5
    demographic: tuple = DEFAULT_DEMOGRAPHIC
    financial: tuple = DEFAULT_FINANCIAL
    factor_debt_coef: tuple = (0.90, -0.60, 0.45, 0.0, 0.0)
    debt_intercept: float = 0.0
    level_noise: float = 1.0
    nonresponse_fraction: float = 0.0
    sporadic_uncertain_rate: float = 0.0
    debt_band_labels: tuple = DEBT_BAND_LABELS

    def __post_init__(self):
        if self.n_factors < 1 or self.n_items < self.n_factors:
            raise DataValidationError(
                "need n_items >= n_factors >= 1"
            )
        if self.n_rows < 10 * self.n_factors:
            raise DataValidationError(
                f"n_rows={self.n_rows} too small for {self.n_factors} "
                f"factors; need at least {10 * self.n_factors}"
            )
        if self.likert_points < 2:
            raise DataValidationError("likert_points must be >= 2")
        if not all(0.0 <= a < 1.0 for a in self.loading_pattern):
            raise DataValidationError("loadings must lie in [0, 1)")
        if not 0.0 <= self.nonresponse_fraction < 1.0:
            raise DataValidationError("nonresponse_fraction must be in [0, 1)")
        if not 0.0 <= self.sporadic_uncertain_rate < 1.0:
            raise DataValidationError(
                "sporadic_uncertain_rate must be in [0, 1)"
            )
        if len(self.debt_band_labels) < 2:
            raise DataValidationError("need >= 2 debt bands")

    def item_names(self) -> list[str]:
        width = len(str(self.n_items))
        return [f"item{str(i + 1).zfill(width)}" for i in range(self.n_items)]

    def watched_variables(self) -> list[str]:
        """Names carrying an uncertain code (the cleaning watch-list)."""
        return [
            v.name
            for v in (*self.demographic, *self.financial)
            if v.with_uncertain
        ]

    def build_schema(self) -> SurveySchema:
        variables = []
        for group, catalog in (
            ("demographic", self.demographic),
            ("financial", self.financial),
        ):
            for v in catalog:
                cats = v.labels + ((UNCERTAIN_LABEL,) if v.with_uncertain else ())
                unc = (UNCERTAIN_LABEL,) if v.with_uncertain else ()
                variables.append(
                    VariableSpec(v.name, v.kind, group, cats, unc)
                )
        scale = tuple(str(i + 1) for i in range(self.likert_points))
        for name in self.item_names():
            variables.append(
                VariableSpec(name, "likert", "psychological", scale, ())
            )
        variables.append(
            VariableSpec(
                "debt_band", "numeric-band", "target",
                tuple(self.debt_band_labels), (),
            )
        )
        return SurveySchema(tuple(variables))


@dataclass(frozen=True)
class GroundTruth:
    """What the generator actually planted."""

    loadings: np.ndarray
    uniquenesses: np.ndarray
    item_factor: tuple[int, ...]
    factor_scores: np.ndarray
    socio_scores: np.ndarray
    debt_coefficients: dict
    debt_propensity: np.ndarray
    planted_nonresponders: tuple[str, ...]
    implied_latent_correlation: np.ndarray = field(repr=False)


def likert_thresholds(n_points: int) -> np.ndarray:
    """Cut points on the latent scale; 5 points give (-1.5,-0.5,0.5,1.5)."""
    return np.linspace(-1.5, 1.5, n_points - 1)


def _stream(seed: int, stage: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(stage,))
    )


def _planted_loadings(config: GeneratorConfig):
    blocks = np.array_split(np.arange(config.n_items), config.n_factors)
    loadings = np.zeros((config.n_items, config.n_factors))
    item_factor = np.empty(config.n_items, dtype=np.int64)
    pattern = config.loading_pattern
    for f, block in enumerate(blocks):
        for pos, i in enumerate(block):
            loadings[i, f] = pattern[pos % len(pattern)]
            item_factor[i] = f
    return loadings, item_factor


def _ordered_bands(latent: np.ndarray, n_bands: int) -> np.ndarray:
    # Equal-probability normal cuts keep band frequencies near-uniform.
    cuts = norm.ppf(np.arange(1, n_bands) / n_bands)
    return np.digitize(latent, cuts)


def generate_synthetic_survey(
    config: GeneratorConfig, seed: int
) -> tuple[Dataset, GroundTruth]:
    """Generate one survey.

    Identical ``(config, seed)`` pairs give bit-identical output.  Returns
    the coded dataset and the planted ground truth.
    """
    n = config.n_rows
    catalog = (*config.demographic, *config.financial)

    loadings, item_factor = _planted_loadings(config)
    uniq = 1.0 - np.sum(loadings**2, axis=1)

    F = _stream(seed, 0).standard_normal((n, config.n_factors))
    eps = _stream(seed, 1).standard_normal((n, config.n_items))
    item_latent = F @ loadings.T + eps * np.sqrt(uniq)
    cuts = likert_thresholds(config.likert_points)
    item_codes = np.digitize(item_latent, cuts)

    socio = _stream(seed, 2).standard_normal(n)
    band_noise = _stream(seed, 3)
    uniform_draw = _stream(seed, 4)
    codes_by_var: dict[str, np.ndarray] = {}
    eta = np.full(n, config.debt_intercept)
    coefficients: dict[str, float] = {"intercept": config.debt_intercept}
    for v in catalog:
        k = len(v.labels)
        if v.socio_weight != 0.0:
            z = v.socio_weight * socio + np.sqrt(
                1.0 - v.socio_weight**2
            ) * band_noise.standard_normal(n)
            codes = _ordered_bands(z, k)
        else:
            codes = uniform_draw.integers(0, k, size=n)
        codes_by_var[v.name] = codes
        if v.debt_coef != 0.0:
            eta = eta + v.debt_coef * (codes - (k - 1) / 2.0)
            coefficients[v.name] = v.debt_coef

    fcoef = np.zeros(config.n_factors)
    given = np.asarray(config.factor_debt_coef, dtype=float)
    fcoef[: min(len(given), config.n_factors)] = given[: config.n_factors]
    eta = eta + F @ fcoef
    for f in range(config.n_factors):
        coefficients[f"factor{f + 1}"] = float(fcoef[f])

    p_debt = 1.0 / (1.0 + np.exp(-eta))
    in_debt = _stream(seed, 5).random(n) < p_debt

    # Band in-debt rows by a noisy copy of their propensity, cut at
    # within-sample quantiles so bands come out near-equal.
    n_debt_bands = len(config.debt_band_labels) - 1
    target = np.zeros(n, dtype=np.int64)
    if in_debt.any():
        u = eta[in_debt] + config.level_noise * _stream(seed, 6).standard_normal(
            int(in_debt.sum())
        )
        qcuts = np.quantile(u, np.arange(1, n_debt_bands) / n_debt_bands)
        target[in_debt] = 1 + np.digitize(u, qcuts)

    n_planted = int(np.floor(config.nonresponse_fraction * n))
    planted = _stream(seed, 7).choice(n, size=n_planted, replace=False)
    planted.sort()
    sporadic = _stream(seed, 8)
    for v in catalog:
        if not v.with_uncertain:
            continue
        uncertain_code = len(v.labels)
        col = codes_by_var[v.name]
        if config.sporadic_uncertain_rate > 0.0:
            hit = sporadic.random(n) < config.sporadic_uncertain_rate
            col = np.where(hit, uncertain_code, col)
        col = col.copy()
        col[planted] = uncertain_code
        codes_by_var[v.name] = col

    schema = config.build_schema()
    columns = [codes_by_var[v.name] for v in catalog]
    columns.extend(item_codes[:, i] for i in range(config.n_items))
    columns.append(target)
    data = Dataset(
        schema=schema,
        codes=np.column_stack(columns),
        row_ids=tuple(str(i) for i in range(1, n + 1)),
    )

    implied = loadings @ loadings.T
    np.fill_diagonal(implied, 1.0)
    truth = GroundTruth(
        loadings=loadings,
        uniquenesses=uniq,
        item_factor=tuple(int(f) for f in item_factor),
        factor_scores=F,
        socio_scores=socio,
        debt_coefficients=coefficients,
        debt_propensity=eta,
        planted_nonresponders=tuple(data.row_ids[i] for i in planted),
        implied_latent_correlation=implied,
    )
    return data, truth


def implied_item_correlation(
    loadings: np.ndarray, n_points: int
) -> np.ndarray:
    """Exact correlation matrix of the discretized likert items.

    Discretizing the latent responses attenuates correlations (about a
    0.91 factor on a 5-point scale), so sample item correlations should be
    compared against this matrix rather than the latent one.  Cell
    probabilities come from bivariate-normal rectangle probabilities over
    the threshold grid.
    """
    loadings = np.asarray(loadings, dtype=float)
    p = loadings.shape[0]
    cuts = likert_thresholds(n_points)
    values = np.arange(n_points, dtype=float)

    marginal = np.diff(norm.cdf(np.concatenate(([-np.inf], cuts, [np.inf]))))
    mu = float(values @ marginal)
    var = float((values - mu) ** 2 @ marginal)

    latent = loadings @ loadings.T
    out = np.eye(p)
    grid = np.array([(a, b) for a in cuts for b in cuts])
    for i in range(p):
        for j in range(i + 1, p):
            rho = float(np.clip(latent[i, j], -0.9999, 0.9999))
            if rho == 0.0:
                continue
            bvn = multivariate_normal(
                mean=[0.0, 0.0], cov=[[1.0, rho], [rho, 1.0]]
            )
            inner = bvn.cdf(grid).reshape(len(cuts), len(cuts))
            cdf = np.zeros((n_points + 1, n_points + 1))
            cdf[1:-1, 1:-1] = inner
            cdf[1:-1, -1] = norm.cdf(cuts)
            cdf[-1, 1:-1] = norm.cdf(cuts)
            cdf[-1, -1] = 1.0
            pmf = np.diff(np.diff(cdf, axis=0), axis=1)
            exy = float(values @ pmf @ values)
            out[i, j] = out[j, i] = (exy - mu * mu) / var
    return out
