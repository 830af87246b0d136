"""Exception types raised by the estimators and their inputs."""


class PPIError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(PPIError, ValueError):
    pass


class NonFiniteValue(PPIError, ValueError):
    pass


class ProbabilityOutOfRange(PPIError, ValueError):
    pass


class NoLabeledUnits(PPIError, ValueError):
    """Too few labeled units for the requested estimator."""


class DegenerateResponse(PPIError, ValueError):
    pass


class SingularInformation(PPIError, ArithmeticError):
    """A (weighted) normal-equation system is numerically singular."""


class BinCoverageError(PPIError, ValueError):
    pass


class FoldTooSmall(PPIError, ValueError):
    pass


class MissingPredictions(PPIError, ValueError):
    pass


class MissingTruth(PPIError, ValueError):
    pass


class InvalidProportion(PPIError, ValueError):
    pass


class SchemaError(PPIError, ValueError):
    pass


class EmptyAfterFiltering(PPIError, ValueError):
    pass


class InsufficientLabels(PPIError, ValueError):
    pass


class FileError(PPIError, OSError):
    pass
