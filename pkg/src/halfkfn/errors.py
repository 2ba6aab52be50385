"""Exception types shared across the package."""


class HalfKfnError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HalfKfnError):
    """Inputs violate a precondition (shape mismatch, non-finite values, ...)."""


class DegenerateLabelsError(HalfKfnError):
    """Fewer than two distinct class labels in the training data."""


class SoftmaxParseError(HalfKfnError):
    """A softmax CSV file is missing, malformed, or violates row invariants."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateClassError(HalfKfnError):
    """A class with a single member cannot support probability estimation."""

    def __init__(self, message, class_label=None):
        super().__init__(message)
        self.class_label = class_label


class DegenerateVarianceError(HalfKfnError):
    """Estimated null variance is zero; the z statistic is undefined."""


class DegenerateBandwidthError(HalfKfnError):
    """Median pairwise distance is zero; supply a fixed bandwidth instead."""


class UnsupportedSizeError(HalfKfnError):
    """Pooled sample too small for the requested moment computation."""


class ConfigError(HalfKfnError):
    """Invalid experiment or CLI configuration."""
