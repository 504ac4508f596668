""" errors v0.1
Exception hierarchy for locuskit

Two families hang off LocusError: ValidationFailure for bad inputs and
configurations (cli exit code 2), NumericFailure for numerical breakdowns
(cli exit code 3).
"""


class LocusError(Exception):
    """Base class for every locuskit error"""

    category = "numeric"


class ValidationFailure(LocusError):
    category = "validation"


class NumericFailure(LocusError):
    category = "numeric"


# Validation family
class InvalidParameter(ValidationFailure):
    pass


class DimensionMismatch(ValidationFailure):
    pass


class ShapeMismatch(ValidationFailure):
    pass


class DomainError(ValidationFailure):
    pass


class UnsupportedComposition(ValidationFailure):
    pass


class DesmoothingInput(ValidationFailure):
    pass


class NotSquare(ValidationFailure):
    pass


class SchemaMismatch(ValidationFailure):
    pass


class ConfigValidationError(ValidationFailure):
    pass


class InvalidSchedule(ValidationFailure):
    pass


class UnsampleableKernel(ValidationFailure):
    pass


class ParseError(ValidationFailure):
    """Raised when a CSV cell cannot be read as a decimal float"""

    def __init__(self, row, column, value=None):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"cannot parse cell at row {row}, column {column!r}: {value!r}"
        )


class IoError(ValidationFailure):
    """Raised when an artifact cannot be written"""


# Numeric family
class EmptyNeighborhood(NumericFailure):
    def __init__(self, message="all kernel weights are zero", rows=None):
        self.rows = rows
        super().__init__(message)


class AllEmptyNeighborhoods(EmptyNeighborhood):
    pass


class NonConvergence(NumericFailure):
    pass


class SingularSystem(NumericFailure):
    pass


class RankDeficient(NumericFailure):
    pass


class ZeroDenominator(NumericFailure):
    pass


class EigenFailure(NumericFailure):
    pass


class NegativeInputForNMF(NumericFailure):
    pass


class EmptyCorpus(NumericFailure):
    pass


class NonFiniteLoss(NumericFailure):
    """Raised when training diverges; carries the loss trace up to the failure"""

    def __init__(self, trace, step):
        self.trace = list(trace)
        self.step = step
        super().__init__(f"loss became non-finite at step {step}")
