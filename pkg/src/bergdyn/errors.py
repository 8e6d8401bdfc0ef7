"""Exception hierarchy shared by all bergdyn modules."""


class BergdynError(Exception):
    """Base class for all library errors."""


class ValidationError(BergdynError):
    """Input violates a precondition (bad domain, bad config, bad support)."""


class SupportViolation(ValidationError):
    """A measure piece lies outside the admissible support."""


class SpectrumError(ValidationError):
    """Resolvent requested at a point of the spectrum (or at zero)."""


class CoverViolation(ValidationError):
    pass


class AmbiguousPiece(ValidationError):
    pass


class NumericalError(BergdynError):
    """Numerical failure: budget exhaustion, divergence, pole proximity."""


class PoleProximityError(NumericalError):
    pass


class BudgetExceeded(NumericalError):
    pass


class NonFiniteSample(NumericalError):
    pass


class NotInMp(NumericalError):
    """The majorant of a representing measure is not p-integrable."""


class GramBreakdown(NumericalError):
    pass
