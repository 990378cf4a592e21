"""Exception types shared across the package."""


class QcaForgeError(Exception):
    """Base class for all package errors."""


class ContextError(QcaForgeError):
    """Operands live in different rings (prime or variable count mismatch)."""


class ShapeError(QcaForgeError):
    """Matrix shapes are incompatible."""


class MalformedInputError(QcaForgeError):
    """Input file or value violates a documented invariant."""


class BudgetError(QcaForgeError):
    """A Groebner/search computation exceeded its step budget."""


class UnsupportedError(QcaForgeError):
    """The requested operation is declared out of range (wrong D, wrong p)."""


class ReductionFailedError(QcaForgeError):
    """A verified reduction heuristic did not terminate within budget."""


class NoSolutionError(QcaForgeError):
    """A linear solve certified by construction to exist failed; upstream bug."""


class CapExceededError(QcaForgeError):
    """A bounded search (b_max, degree_cap) ran out without an answer."""
