"""Exception hierarchy shared by all modules."""


class DimerError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(DimerError, ValueError):
    pass


class DomainError(DimerError, ValueError):
    """A formula was evaluated outside the range where it is defined."""


class NumericalError(DimerError, ArithmeticError):
    pass


class DegeneracyError(NumericalError):
    """Two levels are degenerate to within the configured tolerance."""


class UndefinedEstimateError(DimerError, ValueError):
    pass


class LowConfidenceError(DimerError, ValueError):
    """Too few runs survived post-selection to trust the phase estimate."""


class ConfigError(DimerError, ValueError):
    pass
