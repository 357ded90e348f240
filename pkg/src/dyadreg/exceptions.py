"""Exception hierarchy for dyadreg.

Every error raised on bad input derives from :class:`DyadError`, so callers
(and the CLI) can catch the whole family at once. Numerical failures are kept
separate from input-validation failures because the CLI maps them to
different exit codes.
"""


class DyadError(Exception):
    """Base class for all dyadreg errors."""


class InputError(DyadError, ValueError):
    """Malformed user input (graph, data, configuration)."""


class SelfPairError(InputError):
    pass


class DuplicateDyadError(InputError):
    pass


class UnitOutOfRangeError(InputError):
    pass


class EmptyGraphError(InputError):
    pass


class IsolatedUnitError(InputError):
    pass


class IndexOutOfRangeError(InputError, IndexError):
    pass


class DimensionMismatchError(InputError):
    pass


class OutOfDomainError(InputError):
    pass


class ConfigError(InputError):
    pass


class NumericalError(DyadError, ArithmeticError):
    """A computation could not be completed on otherwise valid input."""


class NonFiniteError(NumericalError):
    pass


class NoConvergenceError(NumericalError):
    pass


class RankDeficientError(NumericalError):
    pass


class TooFewObservationsError(RankDeficientError):
    pass


class NonPositiveVarianceError(NumericalError):
    pass
