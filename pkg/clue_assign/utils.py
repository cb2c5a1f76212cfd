"""Utility functions shared across clue-assign.

This module provides string case conversion (used for error codes and
enum-backed names) and the fixed float formatting used by every report writer.
"""

import math
import re

REPORT_SIGNIFICANT_DIGITS = 6


def convert_snake_to_camel(word: str) -> str:
    """Convert snake_case string to CamelCase.

    Args:
        word: Snake case string to convert

    Returns:
        CamelCase version of the input string

    Example:
        >>> convert_snake_to_camel("iou_max")
        'IouMax'
        >>> convert_snake_to_camel("atss")
        'atss'
    """
    if "_" not in word:
        return word
    return "".join(x.capitalize() or "_" for x in word.split("_"))


def convert_camel_to_snake(word: str) -> str:
    """Convert CamelCase string to snake_case.

    Args:
        word: CamelCase string to convert

    Returns:
        snake_case version of the input string

    Example:
        >>> convert_camel_to_snake("ShapeMismatchError")
        'shape_mismatch_error'
        >>> convert_camel_to_snake("IoUMax")
        'io_u_max'
    """
    s1 = re.sub("(.)([A-Z][a-z]+)", r"\1_\2", word)
    return re.sub("([a-z0-9])([A-Z])", r"\1_\2", s1).lower()


def round_significant(value: float, digits: int = REPORT_SIGNIFICANT_DIGITS) -> float:
    """Round a float to a fixed number of significant digits.

    The result is the float parsed back from ``format(value, ".{digits}g")`` so that
    ``repr`` of it is short and stable, which keeps JSON reports byte-deterministic.

    Args:
        value: Value to round
        digits: Number of significant digits (default: 6)

    Returns:
        Rounded float; non-finite values are returned unchanged

    Example:
        >>> round_significant(25 / 175)
        0.142857
    """
    if not math.isfinite(value):
        return value
    rounded = float(format(value, f".{digits}g"))
    # normalise negative zero so "-0" never leaks into a report
    return rounded + 0.0


def format_significant(value: float, digits: int = REPORT_SIGNIFICANT_DIGITS) -> str:
    """Format a float for CSV output with a fixed number of significant digits.

    Example:
        >>> format_significant(0.5900000000000001)
        '0.59'
    """
    return format(round_significant(value, digits), f".{digits}g")
