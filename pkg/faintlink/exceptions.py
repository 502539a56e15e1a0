"""Exception types raised by faintlink."""


class FaintLinkError(Exception):
    """Base class for all faintlink errors."""


class DomainError(FaintLinkError, ValueError):
    """An argument lies outside the domain of a physical or numerical law."""


class ConfigurationError(FaintLinkError, ValueError):
    """A scenario or module configuration is invalid."""


class InsufficientStatisticsError(FaintLinkError, RuntimeError):
    """
    A coincidence block ended without any SPD1 weight.

    Parameters
    ----------
    message : str
        Human readable description.
    tally : CoincidenceTally
        The partial tally accumulated before giving up.
    """
    def __init__(self, message, tally=None):
        super().__init__(message)
        self.tally = tally
