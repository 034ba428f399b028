"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class FoldError(Exception):
    """Base class for all ffnfold errors."""

    code = "error"

    def __init__(self, message="", code=None):
        if code is not None:
            self.code = code
        super().__init__(f"{self.code}: {message}" if message else self.code)


class ShapeError(FoldError, ValueError):
    code = "dimension-mismatch"


class DegenerateRangeError(FoldError, ValueError):
    code = "degenerate-range"


class InsufficientSamplesError(FoldError, ValueError):
    code = "insufficient-samples"


class InfeasibleBudgetError(FoldError, ValueError):
    code = "infeasible-budget"


class FormatError(FoldError):
    """Raised when reading a model, calibration or artifact file.

    ``code`` is one of ``bad-magic``, ``version-mismatch``, ``truncated`` or
    ``shape-mismatch``.
    """

    code = "format"


class InvariantError(FoldError, RuntimeError):
    code = "internal"
