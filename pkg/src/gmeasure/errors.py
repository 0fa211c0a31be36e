"""Shared exception types and resource limits."""


class GMeasureError(Exception):
    """Base class for all package errors."""


class ConfigError(GMeasureError):
    """Invalid model, schedule or experiment configuration."""


class BudgetError(GMeasureError):
    """An exact enumeration would exceed the configured state budget."""


class TruncationError(GMeasureError):
    """Accumulated truncation error exceeds the caller's tolerance."""


class ConvergenceError(GMeasureError):
    """An iterative solver did not reach its tolerance within the cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


# Joint-state cap for exact enumerations (block tables, operator lattices).
DEFAULT_BUDGET = 1 << 22
