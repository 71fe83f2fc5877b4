"""
Validation utilities for the AMS framework.

Validators return (is_valid, error_message) tuples; callers decide which
exception to raise.
"""

import math
from typing import Any, Iterable, Tuple

import numpy as np

SIMPLEX_TOLERANCE = 1e-12


def validate_positive_number(value: Any, field_name: str = "value") -> Tuple[bool, str]:
    """
    Validate that a value is a number >= 0.

    Args:
        value: Value to validate
        field_name: Name of the field for error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    try:
        num = float(value)
    except (TypeError, ValueError):
        return False, f"{field_name} must be a number"
    if math.isnan(num) or num < 0:
        return False, f"{field_name} must not be negative"
    return True, ""


def validate_strictly_positive(value: Any, field_name: str = "value") -> Tuple[bool, str]:
    """Validate that a value is a finite number > 0."""
    is_valid, msg = validate_positive_number(value, field_name)
    if not is_valid:
        return False, msg
    if float(value) == 0 or math.isinf(float(value)):
        return False, f"{field_name} must be a finite number > 0"
    return True, ""


def validate_open_unit_interval(value: Any, field_name: str = "value") -> Tuple[bool, str]:
    """Validate 0 < value < 1."""
    try:
        num = float(value)
    except (TypeError, ValueError):
        return False, f"{field_name} must be a number"
    if not 0.0 < num < 1.0:
        return False, f"{field_name} must lie in (0, 1)"
    return True, ""


def validate_choice(value: Any, choices: Iterable[str], field_name: str = "value") -> Tuple[bool, str]:
    choices = tuple(choices)
    if value not in choices:
        return False, f"{field_name} must be one of {', '.join(choices)} (got '{value}')"
    return True, ""


def validate_suite_parameters(K: int, w: int, ratio: float, pool_min: int,
                              n_targets: int) -> Tuple[bool, str]:
    """
    Validate the size parameters of a domain suite.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if K < 2:
        return False, "suite.K: at least two source domains are required"
    if w < 4 or w % 2:
        return False, "suite.w: examples per task must be even and >= 4"
    if ratio < 1:
        return False, "suite.ratio: pool ratio must be >= 1"
    if pool_min < w:
        return False, f"suite.pool_min: smallest pool ({pool_min}) must hold at least w={w} examples"
    if n_targets < 1:
        return False, "suite.n_targets: at least one target domain is required"
    return True, ""


def validate_probability_vector(p: Any, tol: float = SIMPLEX_TOLERANCE) -> Tuple[bool, str]:
    """
    Validate that p is a nonnegative vector summing to 1 within tol.

    Returns:
        Tuple of (is_valid, error_message)
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        return False, "probabilities must be a non-empty vector"
    if not np.all(np.isfinite(arr)):
        return False, "probabilities must be finite"
    if np.any(arr < 0):
        return False, "probabilities must be nonnegative"
    total = math.fsum(arr.tolist())
    if abs(total - 1.0) > tol:
        return False, f"probabilities sum to {total!r}, not 1"
    return True, ""


def validate_seed_range(text: str) -> Tuple[bool, str]:
    """Validate 'N' or 'N..M' (inclusive, N <= M)."""
    parts = text.split('..')
    if len(parts) not in (1, 2):
        return False, f"invalid seed range '{text}'"
    try:
        bounds = [int(part) for part in parts]
    except ValueError:
        return False, f"invalid seed range '{text}'"
    if len(bounds) == 2 and bounds[0] > bounds[1]:
        return False, f"empty seed range '{text}'"
    return True, ""
