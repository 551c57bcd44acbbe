"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` (bad input, CLI exit
code 2) and :class:`NumericalError` (the computation itself broke down, CLI
exit code 3).
"""


class ISTError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ISTError, ValueError):
    """Input violates a documented precondition or type invariant."""


class NumericalError(ISTError, ArithmeticError):
    """A numerical stage failed; the message says which."""


class DivergedIntegration(NumericalError):
    pass


class EnvelopeInsufficient(NumericalError):
    pass


class WindingMismatch(NumericalError):
    pass


class SingularLambda(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass


class Overflow(NumericalError):
    pass


class NotPolynomial(NumericalError):
    pass


class GridTooShort(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class SingularDeterminant(NumericalError):
    pass


class EmptySpectrum(NumericalError):
    pass


class NoDecay(NumericalError):
    pass


class CFLViolation(NumericalError):
    pass


class CaseMismatch(ValidationError):
    pass


class AliasWarning(UserWarning):
    """The lambda grid is too coarse for the requested z range."""
