"""
Formatting utilities for metrics files and reports.
"""

from typing import Iterable, Optional
import re


def fmt_float(value: float) -> str:
    """
    Format a float with 17 significant digits for bit-exact replay.

    Example: 0.1 -> "0.10000000000000001"
    """
    return f"{value:.17g}"


def fmt_optional(value: Optional[float]) -> str:
    """17-digit float, or empty string for None."""
    return "" if value is None else fmt_float(value)


def join_floats(values: Iterable[float]) -> str:
    """Semicolon-joined 17-digit floats."""
    return ";".join(fmt_float(v) for v in values)


def join_ids(ids: Iterable[int]) -> str:
    """Semicolon-joined domain ids, e.g. [3, 0, 5] -> "3;0;5"."""
    return ";".join(str(int(i)) for i in ids)


def split_ids(text: str) -> list:
    return [int(part) for part in text.split(";") if part != ""]


def fmt_mean_std(mean: float, std: float, digits: int = 4) -> str:
    """Human-readable mean±std, e.g. "0.1234±0.0100"."""
    return f"{mean:.{digits}f}±{std:.{digits}f}"


def safe_filename(s: str, maxlen: int = 140) -> str:
    """
    Convert a string to a safe filename by removing/replacing unsafe characters.

    Args:
        s: String to convert to safe filename
        maxlen: Maximum length of the resulting filename

    Returns:
        Safe filename string
    """
    s = s or ""
    s = s.strip()
    s = s.replace(" ", "_")
    s = re.sub(r'[^\w\-\._]', '', s)
    return s[:maxlen]
