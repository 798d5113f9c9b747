"""Exception types shared across the package."""


class EntlocError(Exception):
    """Base class for package errors."""


class QubitIndexError(EntlocError, IndexError):
    """A qubit index is out of range or collides with another index."""


class DegenerateBranchError(EntlocError, ValueError):
    """A branch whose probability is below the pruning threshold was normalized."""


class NotHermitianError(EntlocError, ValueError):
    pass


class PlanShapeError(EntlocError, ValueError):
    """Unsharpness and measurement matrices disagree in shape or hold NaNs."""


class NormalizationError(EntlocError, ValueError):
    pass


class UndefinedRatioError(EntlocError, ZeroDivisionError):
    """The projective-measurement reference value is zero."""


class InstanceTooLargeError(EntlocError, ValueError):
    pass


class ConfigError(EntlocError, ValueError):
    pass


class BudgetExceededError(EntlocError, MemoryError):
    pass
