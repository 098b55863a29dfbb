"""Synthetic survey generator: determinism, schema shape, planted
non-responders, and the discretized correlation structure."""

import numpy as np
import pytest

from debtminer import (
    CatalogVariable,
    DataValidationError,
    GeneratorConfig,
    encode,
    generate_synthetic_survey,
    implied_item_correlation,
)


def test_same_config_and_seed_reproduce_bitwise():
    cfg = GeneratorConfig(n_rows=120, nonresponse_fraction=0.1,
                          sporadic_uncertain_rate=0.05)
    a, ta = generate_synthetic_survey(cfg, seed=7)
    b, tb = generate_synthetic_survey(cfg, seed=7)
    assert np.array_equal(a.codes, b.codes)
    assert a.row_ids == b.row_ids
    assert np.array_equal(ta.factor_scores, tb.factor_scores)
    assert ta.planted_nonresponders == tb.planted_nonresponders

    c, _ = generate_synthetic_survey(cfg, seed=8)
    assert not np.array_equal(a.codes, c.codes)


def test_generated_schema_shape():
    cfg = GeneratorConfig(n_rows=80)
    data, truth = generate_synthetic_survey(cfg, seed=0)
    schema = data.schema
    assert schema.group_names("demographic") == [
        "house_status", "marital_status", "employment", "education",
        "age_band",
    ]
    assert schema.group_names("financial") == [
        "household_income", "personal_income", "savings",
    ]
    items = schema.group_names("psychological")
    assert items == [f"item{i + 1:02d}" for i in range(28)]
    assert schema.target.name == "debt_band"
    # uncertain codes appear exactly on the watched variables
    assert cfg.watched_variables() == [
        "house_status", "marital_status", "employment", "education",
        "household_income", "personal_income", "savings",
    ]
    for var in schema:
        if var.name in cfg.watched_variables():
            assert var.uncertain_codes == ("uncertain",)
            assert var.categories[-1] == "uncertain"
        else:
            assert var.uncertain_codes == ()


def test_planted_nonresponder_count_and_behaviour():
    cfg = GeneratorConfig(n_rows=157, nonresponse_fraction=0.2)
    data, truth = generate_synthetic_survey(cfg, seed=3)
    planted = truth.planted_nonresponders
    assert len(planted) == 31  # floor(0.2 * 157)
    watched = cfg.watched_variables()
    rows = [data.row_ids.index(rid) for rid in planted]
    for name in watched:
        var = data.schema[name]
        col = data.column(name)
        uncertain_code = var.categories.index("uncertain")
        assert all(col[r] == uncertain_code for r in rows)
    # age_band carries no uncertain code, so planted rows answer it
    assert data.schema["age_band"].uncertain_codes == ()
    uncertain_total = sum(data.uncertain_counts().values())
    assert uncertain_total == len(planted) * len(watched)


def test_ground_truth_is_internally_consistent():
    cfg = GeneratorConfig(n_rows=100)
    _, truth = generate_synthetic_survey(cfg, seed=1)
    L = truth.loadings
    assert L.shape == (28, 5)
    assert np.allclose(truth.uniquenesses, 1.0 - (L**2).sum(axis=1))
    # one nonzero loading per item, on its assigned factor
    for i, f in enumerate(truth.item_factor):
        assert L[i, f] > 0
        assert np.count_nonzero(L[i]) == 1
    # contiguous near-equal blocks
    assert list(truth.item_factor) == sorted(truth.item_factor)
    assert truth.factor_scores.shape == (100, 5)
    assert set(truth.debt_coefficients) >= {"intercept", "factor1"}


def test_debt_bands_are_all_occupied():
    cfg = GeneratorConfig(n_rows=2000)
    data, _ = generate_synthetic_survey(cfg, seed=0)
    target = data.column("debt_band")
    assert set(np.unique(target)) == {0, 1, 2, 3, 4}
    # intercept 0 keeps debt/no-debt roughly balanced
    share = float(np.mean(target > 0))
    assert 0.35 < share < 0.65


def test_item_correlations_match_the_discretized_model():
    """Sample item correlations should track the implied matrix, which is
    attenuated relative to the latent one by the likert cut points."""
    cfg = GeneratorConfig(n_rows=4000)
    data, truth = generate_synthetic_survey(cfg, seed=0)
    items = encode(data, data.schema.group_names("psychological"),
                   "likert-numeric")
    sample = np.corrcoef(items.values, rowvar=False)
    implied = implied_item_correlation(truth.loadings, cfg.likert_points)
    off = ~np.eye(28, dtype=bool)
    gap = np.abs(sample - implied)[off]
    assert gap.max() < 0.08
    assert gap.mean() < 0.02

    latent = truth.loadings @ truth.loadings.T
    linked = (latent > 0.05) & off
    assert (implied[linked] < latent[linked]).all()
    assert np.allclose(np.diag(implied), 1.0)


def test_generator_config_validation():
    with pytest.raises(DataValidationError, match="n_items >= n_factors"):
        GeneratorConfig(n_rows=200, n_factors=6, n_items=5)
    with pytest.raises(DataValidationError, match="too small"):
        GeneratorConfig(n_rows=30, n_factors=5)
    with pytest.raises(DataValidationError, match="likert_points"):
        GeneratorConfig(n_rows=100, likert_points=1)
    with pytest.raises(DataValidationError, match=r"\[0, 1\)"):
        GeneratorConfig(n_rows=100, loading_pattern=(1.0,))
    with pytest.raises(DataValidationError, match="nonresponse_fraction"):
        GeneratorConfig(n_rows=100, nonresponse_fraction=1.0)
    with pytest.raises(DataValidationError, match="sporadic"):
        GeneratorConfig(n_rows=100, sporadic_uncertain_rate=-0.1)
    with pytest.raises(DataValidationError, match="debt bands"):
        GeneratorConfig(n_rows=100, debt_band_labels=("none",))


def test_catalog_variable_validation():
    with pytest.raises(DataValidationError, match="socio_weight"):
        CatalogVariable("v", "categorical", ("a", "b"), socio_weight=1.0)
    with pytest.raises(DataValidationError, match=">= 2"):
        CatalogVariable("v", "categorical", ("a",))


def test_sporadic_rate_adds_scattered_uncertain_answers():
    quiet = GeneratorConfig(n_rows=500)
    noisy = GeneratorConfig(n_rows=500, sporadic_uncertain_rate=0.05)
    a, _ = generate_synthetic_survey(quiet, seed=11)
    b, _ = generate_synthetic_survey(noisy, seed=11)
    assert sum(a.uncertain_counts().values()) == 0
    hits = sum(b.uncertain_counts().values())
    # 7 watched variables x 500 rows x 5 percent
    assert 100 < hits < 250
