"""Survey-mining toolkit for consumer indebtedness modelling.

The package walks a categorical survey from raw answers to a model
comparison: homogeneity analysis for screening and scaling, factor
analysis of the item battery, and a stepwise evaluation of predictor
groups across three classifier families, all reproducible from a config
file and a seed.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError, DataValidationError, DebtminerError, EncodingError,
    EvaluationError, MissingArtifactError, NumericalError,
)
from .schema import SurveySchema, VariableSpec, load_schema, save_schema
from .dataset import (
    Dataset, RemovalReport, TargetLabelling, build_labels,
    drop_systematic_nonresponse, load_dataset, read_csv, write_csv,
)
from .encoding import (
    FULL_INDICATOR, LIKERT_NUMERIC, REFERENCE_DROPPED, EncodedMatrix,
    drop_empty_categories, encode,
)
from .homals import (
    CategoryDiagnostics, CategoryPoint, Homals, category_diagnostics,
    fit_homals,
)
from .factors import (
    CorrelationMatrix, FactorAnalysis, FactorModel, ParallelAnalysisResult,
    ReliabilityReport, band_alpha, correlation, cronbach_alpha,
    extract_factors, factor_scores, parallel_analysis, reverse_code, scree,
    varimax, varimax_criterion,
)
from .classifiers import (
    MultinomialLogit, NeuralNetClassifier, RandomForest, TunedNeuralNet,
    gini_importance, load_model, save_model, train_multinomial_lr,
    train_neural_net, train_random_forest, tune_neural_net,
)
from .evaluation import (
    CvPlan, CvResult, GroupedPredictors, StepwiseResult, TTestResult,
    chi_square_homogeneity, cross_validate, make_cv_plan, paired_t_test,
    run_stepwise, undersample,
)
from .synthetic import (
    CatalogVariable, GeneratorConfig, GroundTruth, generate_synthetic_survey,
    implied_item_correlation,
)
from .pipeline import (
    PipelineConfig, apply_overrides, cmd_clean, cmd_evaluate, cmd_factors,
    cmd_report, cmd_synth, default_config_text, load_config,
)

__all__ = [
    "__version__",
    "ConfigError", "DataValidationError", "DebtminerError", "EncodingError",
    "EvaluationError", "MissingArtifactError", "NumericalError",
    "SurveySchema", "VariableSpec", "load_schema", "save_schema",
    "Dataset", "RemovalReport", "TargetLabelling", "build_labels",
    "drop_systematic_nonresponse", "load_dataset", "read_csv", "write_csv",
    "FULL_INDICATOR", "LIKERT_NUMERIC", "REFERENCE_DROPPED", "EncodedMatrix",
    "drop_empty_categories", "encode",
    "CategoryDiagnostics", "CategoryPoint", "Homals", "category_diagnostics",
    "fit_homals",
    "CorrelationMatrix", "FactorAnalysis", "FactorModel",
    "ParallelAnalysisResult", "ReliabilityReport", "band_alpha",
    "correlation",
    "cronbach_alpha", "extract_factors", "factor_scores",
    "parallel_analysis", "reverse_code", "scree", "varimax",
    "varimax_criterion",
    "MultinomialLogit", "NeuralNetClassifier", "RandomForest",
    "TunedNeuralNet", "gini_importance", "load_model", "save_model",
    "train_multinomial_lr", "train_neural_net", "train_random_forest",
    "tune_neural_net",
    "CvPlan", "CvResult", "GroupedPredictors", "StepwiseResult",
    "TTestResult", "chi_square_homogeneity", "cross_validate",
    "make_cv_plan", "paired_t_test", "run_stepwise", "undersample",
    "CatalogVariable",
    "GeneratorConfig", "GroundTruth", "generate_synthetic_survey",
    "implied_item_correlation",
    "PipelineConfig", "apply_overrides", "cmd_clean", "cmd_evaluate",
    "cmd_factors", "cmd_report", "cmd_synth", "default_config_text",
    "load_config",
]
