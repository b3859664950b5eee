"""Exception hierarchy shared by every module."""


class HesscapError(Exception):
    pass


class DomainError(HesscapError, ValueError):
    """Argument outside the operation's domain."""


class UnsupportedError(DomainError):
    pass


class ConvergenceError(HesscapError, RuntimeError):
    pass


class AdmissibilityError(DomainError):
    """Raised when a profile or field fails the k-admissibility scan.

    ``worst`` holds ``(location, S_j value, j)`` tuples for the worst offenders.
    """

    def __init__(self, message, worst=()):
        super().__init__(message)
        self.worst = list(worst)


class IntegrationError(HesscapError, RuntimeError):
    pass
