"""Exception hierarchy shared across the package."""


class HdRiskcastError(Exception):
    """Base class for all package errors."""


class DataError(HdRiskcastError):
    """Input data is missing, malformed, or insufficient for the request."""


class ConfigError(HdRiskcastError):
    """A configuration file failed to parse or validate."""


class NumericalError(HdRiskcastError):
    """An iterative routine failed to converge or left its valid domain."""


class MissingCovariateError(DataError):
    """A subject lacks a covariate required by the selected model."""

    def __init__(self, subject_id, covariate):
        self.subject_id = subject_id
        self.covariate = covariate
        super().__init__(
            f"subject {subject_id!r} is missing required covariate {covariate!r}"
        )
