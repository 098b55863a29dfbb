"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: DataValidationError and ConfigError are
user-input problems (exit 1), NumericalError is a numerical failure (exit 2),
MissingArtifactError means a pipeline stage ran before its inputs exist
(exit 3).
"""


class DebtminerError(Exception):
    """Base class for all toolkit errors."""


class DataValidationError(DebtminerError):
    """Bad schema, dataset, labels or operation preconditions."""


class EncodingError(DataValidationError):
    """Invalid encoding request (wrong scheme for a variable, bad cell)."""


class ConfigError(DataValidationError):
    """Malformed or inconsistent pipeline configuration."""


class NumericalError(DebtminerError):
    """A numerical procedure failed (divergence, singularity, overflow)."""


class EvaluationError(DebtminerError):
    """A cross-validation cell failed; the message carries the cell identity."""


class MissingArtifactError(DebtminerError):
    """A pipeline stage requires output files that were never produced."""
