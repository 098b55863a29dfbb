"""Model save/load round trips and the file-format error paths."""

import numpy as np
import pytest

from debtminer import (
    DataValidationError,
    FactorAnalysis,
    MissingArtifactError,
    MultinomialLogit,
    NeuralNetClassifier,
    RandomForest,
    load_model,
    save_model,
    tune_neural_net,
)


@pytest.fixture
def training_data():
    rng = np.random.default_rng(0)
    X = np.vstack([
        rng.standard_normal((40, 3)) + off
        for off in (-3.0, 0.0, 3.0)
    ])
    y = np.array(["a"] * 40 + ["b"] * 40 + ["c"] * 40, dtype=object)
    return X, y


def _round_trip(model, path, X):
    save_model(model, path)
    loaded = load_model(path)
    assert type(loaded) is type(model)
    assert loaded.classes_ == model.classes_
    assert loaded.get_params() == model.get_params()
    # repr-formatted floats reload to the same bits
    assert np.array_equal(loaded.predict_proba(X), model.predict_proba(X))
    assert np.array_equal(loaded.predict(X), model.predict(X))


def test_logit_round_trip(training_data, tmp_path):
    X, y = training_data
    model = MultinomialLogit(l2=1e-3, max_iter=300).fit(X, y)
    _round_trip(model, tmp_path / "lr.model", X)


def test_forest_round_trip(training_data, tmp_path):
    X, y = training_data
    model = RandomForest(n_trees=15, seed=2).fit(X, y)
    _round_trip(model, tmp_path / "rf.model", X)
    assert load_model(tmp_path / "rf.model").oob_score_ is None


def test_neural_net_round_trip(training_data, tmp_path):
    X, y = training_data
    model = NeuralNetClassifier(hidden=3, epochs=200, seed=1).fit(X, y)
    _round_trip(model, tmp_path / "nn.model", X)


def test_tuned_net_saves_its_inner_model(training_data, tmp_path):
    X, y = training_data
    tuned = tune_neural_net(X, y, hidden_range=[1, 2], inner_k=3,
                            epochs=150, seed=0)
    path = tmp_path / "tuned.model"
    save_model(tuned, path)
    loaded = load_model(path)
    assert isinstance(loaded, NeuralNetClassifier)
    assert np.array_equal(loaded.predict_proba(X),
                          tuned.model.predict_proba(X))


def test_saving_rejects_unfitted_and_foreign_models(tmp_path):
    with pytest.raises(DataValidationError, match="before saving"):
        save_model(MultinomialLogit(), tmp_path / "x.model")
    with pytest.raises(DataValidationError, match="cannot persist"):
        save_model(FactorAnalysis(), tmp_path / "x.model")


def test_load_error_paths(training_data, tmp_path):
    X, y = training_data
    with pytest.raises(MissingArtifactError, match="not found"):
        load_model(tmp_path / "ghost.model")

    bad = tmp_path / "bad.model"
    bad.write_text("something else entirely\n")
    with pytest.raises(DataValidationError, match="not a model file"):
        load_model(bad)

    future = tmp_path / "future.model"
    future.write_text("debtminer-model v99\nfamily multinomial-lr\n"
                      'params {}\nlabels ["a", "b"]\n')
    with pytest.raises(DataValidationError, match="unsupported version"):
        load_model(future)

    stub = tmp_path / "stub.model"
    stub.write_text("debtminer-model v1\nfamily multinomial-lr\n")
    with pytest.raises(DataValidationError, match="truncated"):
        load_model(stub)

    alien = tmp_path / "alien.model"
    alien.write_text("debtminer-model v1\nfamily gradient-boost\n"
                     'params {}\nlabels ["a", "b"]\n')
    with pytest.raises(DataValidationError, match="unknown family"):
        load_model(alien)

    path = tmp_path / "lr.model"
    save_model(MultinomialLogit(max_iter=200).fit(X, y), path)
    lines = path.read_text().splitlines()

    headless = tmp_path / "headless.model"
    headless.write_text("\n".join(lines[:4]) + "\n")
    with pytest.raises(DataValidationError, match="missing blocks"):
        load_model(headless)

    noise = tmp_path / "noise.model"
    noise.write_text("\n".join(lines[:4]) + "\nnot an array line\n")
    with pytest.raises(DataValidationError, match="unexpected line"):
        load_model(noise)
