"""Exception types shared across the package."""


class PercolabError(Exception):
    """Base class for all percolab errors."""


class ConfigurationError(PercolabError, ValueError):
    """Invalid construction parameters or experiment config."""


class DomainError(PercolabError, ValueError):
    """Arguments outside an operation's domain (bad p, empty set, ...)."""


class EnumerationGuardError(PercolabError, ValueError):
    """Requested enumeration exceeds the combinatorial guard."""


class UnfittableError(PercolabError, ValueError):
    """Regression refused; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
