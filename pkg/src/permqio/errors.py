"""Exception hierarchy shared by the solvers, the oracle and the CLI."""


class PermQIOError(Exception):
    """Base class for all package errors."""


class ConfigError(PermQIOError, ValueError):
    """Invalid solver configuration or violated numerical guard."""


class InstanceError(PermQIOError, ValueError):
    """Malformed instance document or instance invariant violation."""


class ExtinctionError(PermQIOError):
    """A population or walker ensemble died out.

    ``step`` is the index of the step at which it happened and ``report``
    carries the best-so-far result when the solver could build one.
    """

    def __init__(self, message, step, report=None):
        super().__init__(message)
        self.step = step
        self.report = report


class CapExceededError(PermQIOError):
    """Exact enumeration refused because n exceeds the configured cap."""


class OracleViolationError(PermQIOError):
    """A solver reported a cost below the exact minimum."""


class LedgerOverflowError(PermQIOError):
    """The unique-route set grew past its memory bound."""
