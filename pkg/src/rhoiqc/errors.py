"""Exception hierarchy shared by all modules."""


class RhoIqcError(Exception):
    """Base class for errors raised by this package."""


class PreconditionError(RhoIqcError, ValueError):
    """An operation was called outside its domain of validity."""


class SingularityError(RhoIqcError, ValueError):
    """A resolvent or algebraic loop is singular at the requested point."""


class RhoValidityError(PreconditionError):
    """A multiplier is not a valid rho-IQC at the requested rate."""


class AlgebraicLoopError(RhoIqcError, RuntimeError):
    """Per-step fixed-point iteration for a D != 0 loop failed to converge."""
