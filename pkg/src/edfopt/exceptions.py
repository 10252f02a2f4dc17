"""Exception hierarchy for edfopt."""


class EDFOptError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteEvaluation(EDFOptError, FloatingPointError):
    """An oracle returned NaN or an infinite value."""


class UnsupportedOrder(EDFOptError, ValueError):
    """A derivative order was requested that the problem cannot supply."""


class DomainError(EDFOptError, ValueError):
    """An argument lies outside the domain of a function."""


class StartOutOfDomain(DomainError):
    """An unconstrained minimization was started outside its domain."""


class SingularSystem(EDFOptError, ArithmeticError):
    """No admissible Levenberg shift made the Newton system positive definite."""


class InnerSolveFailure(EDFOptError, RuntimeError):
    """An auxiliary minimization hit its iteration cap before its tolerance."""


class OracleNoConverge(EDFOptError, RuntimeError):
    """The dual proximal oracle exceeded its coordinate-sweep cap."""


class ParseError(EDFOptError, ValueError):
    """A problem file could not be read."""


class ValidationError(EDFOptError, ValueError):
    """A problem file parsed but failed a structural check."""
