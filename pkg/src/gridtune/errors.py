"""Exception hierarchy for gridtune."""


class GridTuneError(Exception):
    """Base class for all gridtune errors."""


# Search space


class SpaceError(GridTuneError, ValueError):
    """A search space or configuration violates its invariants."""


class InvalidRangeError(SpaceError):
    """A parameter has min > max."""


class MisalignedStepError(SpaceError):
    """A parameter range is not a whole number of steps."""


class DuplicateNameError(SpaceError):
    """Two parameters share a name."""


class EmptySpaceError(SpaceError):
    """A search space declares no parameters."""


class GridOverflowError(SpaceError):
    """The grid point count does not fit a signed 64-bit integer."""


class OffGridError(SpaceError):
    """A configuration is out of range or not aligned to the grid."""


class DimensionMismatchError(GridTuneError, ValueError):
    """Vectors of different dimension were combined."""


# History


class HistoryError(GridTuneError):
    """The evaluation history rejected an operation."""


class DuplicateOkError(HistoryError):
    """A second ok evaluation was recorded for one configuration."""


class HistoryOrderError(HistoryError):
    """Iteration numbers are not strictly increasing."""


class EmptyHistoryError(HistoryError):
    """An operation needs at least one ok evaluation."""


# Engines


class EngineStop(GridTuneError):
    """An engine cannot propose another configuration."""


class BudgetExhausted(EngineStop):
    """The iteration cap has been reached."""


class SpaceExhausted(EngineStop):
    """Every grid point already has an ok evaluation."""


class EngineStalled(EngineStop):
    """The engine keeps proposing only cached configurations."""


class EngineProtocolError(GridTuneError, RuntimeError):
    """propose/observe were called out of order."""


class InsufficientHistoryError(GridTuneError, ValueError):
    """Not enough ok evaluations for the requested operation."""


class SpaceTooSmallError(GridTuneError, ValueError):
    """More distinct points were requested than the grid holds."""


# Gaussian process


class GPError(GridTuneError):
    """Base class for surrogate model errors."""


class NotPositiveDefiniteError(GPError, ValueError):
    """The covariance matrix could not be factorized, even with jitter."""


class DegenerateInputError(GPError, ValueError):
    """Training inputs contain duplicate rows."""


class AllFitsFailedError(GPError):
    """No hyperparameter candidate produced a factorizable model."""


class InvalidHyperError(GPError, ValueError):
    """Kernel hyperparameters are non-finite or out of bounds."""


# Harness


class HarnessError(GridTuneError):
    """Base class for evaluation harness errors."""


class UnknownPlaceholderError(HarnessError, ValueError):
    """A template references a parameter the space does not declare."""


class MissingBindingError(HarnessError, ValueError):
    """A parameter is not bound where its binding kind requires."""


class InvalidPatternError(HarnessError, ValueError):
    """The metric pattern does not compile or has the wrong group count."""


class SpawnError(HarnessError):
    """The workload process could not be started."""


class UnboundParameterError(HarnessError, ValueError):
    """A synthetic surface needs a parameter the space does not declare."""


# Analysis


class GridTooLargeError(GridTuneError, ValueError):
    """An exhaustive sweep was requested over a grid above the limit."""


# Study files


class StudyError(GridTuneError):
    """A study file could not be loaded."""


class StudyParseError(StudyError, ValueError):
    """A study file is not valid JSON."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class StudyValidationError(StudyError, ValueError):
    """A study file parsed but failed validation."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
