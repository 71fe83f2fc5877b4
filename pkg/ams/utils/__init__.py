"""Utility functions and helpers"""

from .formatting import fmt_float, join_ids, safe_filename
from .validation import validate_positive_number, validate_probability_vector
