"""Exception hierarchy shared by all modules."""


class ConfigurationError(ValueError):
    """Invalid parameters, shapes or configuration values."""


class InvalidMassError(ConfigurationError):
    """Total initial mass is not equal to the domain length."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericalFailure(RuntimeError):
    """A numerical procedure failed (root not bracketed, singular matrix...)."""


class DegenerateEdgeError(NumericalFailure):
    """Maxwell-Stefan edge with all log-mean concentrations equal to zero."""


class StepFailure(NumericalFailure):
    """A time step could not be completed (Newton divergence, CFL, tiny cell)."""


class CFLViolation(StepFailure):
    """The interface moved more than half a reference cell in one step."""
