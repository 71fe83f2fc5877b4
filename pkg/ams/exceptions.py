"""
Exception hierarchy for the AMS framework.

Validators in ams.utils.validation return (is_valid, message) tuples;
service entry points convert failures into the exceptions below.
"""

from typing import Any, Optional


class AmsError(Exception):
    """Base class for all framework errors."""


class DimensionError(AmsError, ValueError):
    """Shape mismatch or empty input."""


class NumericError(AmsError, ArithmeticError):
    """Non-finite value encountered in checked mode."""


class ConfigError(AmsError, ValueError):
    """Invalid configuration value, unknown key or unknown preset."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class InsufficientPoolError(AmsError, ValueError):
    """Domain pool holds fewer examples than one task needs."""


class TaskQuantityError(AmsError, ValueError):
    """Combination count requested with w > V."""


class RunAbortedError(AmsError):
    """
    A run stopped on a numeric error.

    Attributes:
        iteration: Iteration at which the error occurred
        checkpoint_path: Directory holding the last-good checkpoint, if written
        summary: Aborted RunSummary (iterations completed, counts so far)
    """

    def __init__(self, message: str, iteration: int,
                 checkpoint_path: Optional[str] = None, summary: Any = None):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration
        self.checkpoint_path = checkpoint_path
        self.summary = summary
