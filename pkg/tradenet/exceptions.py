"""
Exception families shared by services and commands
"""

from typing import Any, Sequence


class TradeNetError(Exception):
    """Base class for all tradenet errors"""

    pass


class ConfigurationError(TradeNetError, ValueError):
    """Raised when a run configuration or a parameter is invalid"""

    pass


class AgentLookupError(TradeNetError, KeyError):
    """Raised when an AgentId does not exist in the network"""

    pass


class ContractViolationError(TradeNetError):
    """Raised when a caller breaks an operation precondition"""

    pass


class ConservationError(TradeNetError):
    """Raised when trade settlement does not conserve total energy"""

    pass


class EmptyInputError(TradeNetError):
    """Raised when an analysis receives no usable data"""

    pass


class InsufficientTailError(TradeNetError):
    """Raised when too few samples fall in the fitted tail"""

    pass


class InsufficientDataError(TradeNetError):
    """Raised when a sample is too small for the requested statistic"""

    pass


class DomainError(TradeNetError, ValueError):
    """Raised when a parameter lies outside the domain of a formula"""

    pass


class InputFormatError(TradeNetError):
    """Raised when an input file is missing, unreadable or garbled"""

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.message = message
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")

    def __reduce__(self) -> tuple[Any, ...]:
        return type(self), (self.path, self.message, self.line)


class DataValidationError(TradeNetError):
    """Raised when an ingested series violates its invariants"""

    def __init__(self, message: str, rows: Sequence[int] = ()):
        self.message = message
        self.rows = list(rows)
        if self.rows:
            message = f"{message} (rows: {', '.join(str(r) for r in self.rows)})"
        super().__init__(message)

    def __reduce__(self) -> tuple[Any, ...]:
        return type(self), (self.message, self.rows)
