"""Unit tests for utility functions."""

import math

from clue_assign.utils import (
    convert_camel_to_snake,
    convert_snake_to_camel,
    format_significant,
    round_significant,
)


class TestConvertSnakeToCamel:
    """Tests for convert_snake_to_camel function."""

    def test_simple_word(self) -> None:
        """Test conversion of simple words without underscores."""
        assert convert_snake_to_camel("mcss") == "mcss"
        assert convert_snake_to_camel("center") == "center"

    def test_snake_case_conversion(self) -> None:
        """Test conversion of snake_case strings."""
        assert convert_snake_to_camel("iou_max") == "IouMax"
        assert convert_snake_to_camel("per_gt_positives") == "PerGtPositives"

    def test_multiple_underscores(self) -> None:
        """Test conversion with multiple consecutive underscores."""
        assert convert_snake_to_camel("iou__max") == "Iou_Max"

    def test_leading_trailing_underscores(self) -> None:
        """Test conversion with leading or trailing underscores."""
        assert convert_snake_to_camel("_scene") == "_Scene"
        assert convert_snake_to_camel("scene_") == "Scene_"

    def test_empty_string(self) -> None:
        """Test conversion of empty string."""
        assert convert_snake_to_camel("") == ""


class TestConvertCamelToSnake:
    """Tests for convert_camel_to_snake function."""

    def test_error_class_names(self) -> None:
        """Error codes are the snake_case class names."""
        assert convert_camel_to_snake("ShapeMismatchError") == "shape_mismatch_error"
        assert convert_camel_to_snake("UnknownAssignerError") == "unknown_assigner_error"

    def test_acronyms(self) -> None:
        """Runs of capitals split before the last capital."""
        assert convert_camel_to_snake("HTTPError") == "http_error"

    def test_already_snake(self) -> None:
        assert convert_camel_to_snake("iou_max") == "iou_max"


class TestSignificantDigits:
    """Tests for the report float formatting."""

    def test_round_to_six_digits(self) -> None:
        assert round_significant(2 / 3) == 0.666667
        assert round_significant(123456789.0) == 123457000.0

    def test_negative_zero_is_normalised(self) -> None:
        """-0.0 never reaches a report."""
        assert math.copysign(1.0, round_significant(-0.0)) == 1.0

    def test_non_finite_passthrough(self) -> None:
        assert math.isnan(round_significant(float("nan")))
        assert round_significant(float("inf")) == float("inf")

    def test_format_strips_representation_noise(self) -> None:
        assert format_significant(0.5900000000000001) == "0.59"
        assert format_significant(1.0) == "1"
        assert format_significant(1e-7) == "1e-07"
