"""Exception types shared across modules."""


class ToralDefectError(Exception):
    """Base class."""


class EmptySpectrumError(ToralDefectError, ValueError):
    pass


class UnsupportedLengthError(ToralDefectError, ValueError):
    pass


class BudgetError(ToralDefectError, MemoryError):
    """A configured memory or enumeration budget would be exceeded."""


class ConvergenceError(ToralDefectError, ArithmeticError):
    pass


class ConsistencyError(ToralDefectError, AssertionError):
    """An internal exact-arithmetic invariant failed."""
