"""Exception hierarchy shared by the package."""


class CovrepError(Exception):
    """Base class for all package errors."""


class InvalidArgument(CovrepError, ValueError):
    pass


class NumericError(CovrepError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class GridMismatch(CovrepError, ValueError):
    """Operands live on different grids."""


class PreconditionError(CovrepError, ValueError):
    pass


class ConstructionError(CovrepError):
    """A constructor could not build the requested object."""


class InfeasibleConstruction(ConstructionError):
    """No parameters exist that satisfy the requested construction."""


class InternalConsistencyError(ConstructionError):
    """A construction succeeded but failed its own post-check."""


class UnsupportedBranch(CovrepError):
    """Parameters fall outside every enumerated closed-form branch."""
