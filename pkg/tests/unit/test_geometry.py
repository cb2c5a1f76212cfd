"""Unit tests for box geometry."""

import math

import numpy as np
import pytest

from clue_assign.error.exceptions import InvalidBoxError
from clue_assign.geometry import (
    BBox,
    Point,
    absolute_size,
    area,
    boxes_to_array,
    center,
    center_distance,
    center_distances,
    contains_center,
    contains_points,
    iou,
    iou_one_to_many,
    validate_box_array,
)
from tests.oracle import exact_iou


class TestBBox:
    """Tests for BBox construction."""

    def test_from_xywh(self) -> None:
        assert BBox.from_xywh(2, 3, 4, 5) == BBox(2.0, 3.0, 6.0, 8.0)
        assert BBox(2, 3, 6, 8).to_xywh() == (2.0, 3.0, 4.0, 5.0)

    def test_from_center(self) -> None:
        assert BBox.from_center(5, 5, 4, 2) == BBox(3, 4, 7, 6)

    @pytest.mark.parametrize(
        "coords",
        [(0, 0, 0, 1), (0, 0, 1, 0), (5, 5, 4, 6), (0, 0, math.inf, 1), (math.nan, 0, 1, 1)],
    )
    def test_invalid_boxes_are_rejected(self, coords: tuple[float, ...]) -> None:
        """Zero or negative extent and non-finite coordinates cannot be constructed."""
        with pytest.raises(InvalidBoxError):
            BBox(*coords)

    def test_translate(self) -> None:
        assert BBox(0, 0, 2, 2).translate(1, -1) == BBox(1, -1, 3, 1)


class TestScalarGeometry:
    """Tests for area, IoU and centers."""

    def test_area(self) -> None:
        assert area(BBox(2, 3, 4, 9)) == 12.0
        assert absolute_size(BBox(0, 0, 4, 9)) == 6.0

    def test_iou_reference_value(self) -> None:
        assert iou(BBox(0, 0, 10, 10), BBox(5, 5, 15, 15)) == pytest.approx(25 / 175, abs=1e-12)

    def test_iou_disjoint_and_touching(self) -> None:
        """Shared edges have zero intersection."""
        assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)) == 0.0
        assert iou(BBox(0, 0, 1, 1), BBox(1, 0, 2, 1)) == 0.0

    def test_iou_nested(self) -> None:
        assert iou(BBox(0, 0, 10, 10), BBox(2, 2, 4, 4)) == pytest.approx(0.04)

    def test_center(self) -> None:
        assert center(BBox(0, 0, 4, 2)) == Point(2.0, 1.0)
        assert center_distance(BBox(0, 0, 2, 2), BBox(3, 4, 5, 6)) == 5.0

    def test_contains_center_is_boundary_inclusive(self) -> None:
        gt = BBox(0, 0, 10, 10)
        assert contains_center(gt, BBox(8, 8, 12, 12))
        assert not contains_center(gt, BBox(9, 9, 13, 13))

    def test_iou_properties_on_random_integer_boxes(self) -> None:
        """Symmetry and self-IoU hold exactly; values match rational arithmetic."""
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            x1, y1, x2, y2 = rng.integers(0, 64, 4)
            u1, v1, u2, v2 = rng.integers(0, 64, 4)
            a = (min(x1, x2), min(y1, y2), max(x1, x2) + 1, max(y1, y2) + 1)
            b = (min(u1, u2), min(v1, v2), max(u1, u2) + 1, max(v1, v2) + 1)
            box_a, box_b = BBox(*a), BBox(*b)
            value = iou(box_a, box_b)
            assert value == iou(box_b, box_a)
            assert iou(box_a, box_a) == 1.0
            assert 0.0 <= value <= 1.0
            assert value == pytest.approx(float(exact_iou(a, b)), abs=1e-12)


class TestBatchGeometry:
    """Tests for the array helpers."""

    def test_batch_iou_matches_scalar_bit_for_bit(self) -> None:
        rng = np.random.default_rng(3)
        xy = rng.uniform(0, 100, (50, 2))
        wh = rng.uniform(1, 40, (50, 2))
        boxes = [BBox(x, y, x + w, y + h) for (x, y), (w, h) in zip(xy, wh, strict=True)]
        arr = boxes_to_array(boxes)
        for i, box in enumerate(boxes):
            batch = iou_one_to_many(arr[i], arr)
            assert batch.tolist() == [iou(box, other) for other in boxes]

    def test_center_distances(self) -> None:
        arr = boxes_to_array([BBox(0, 0, 2, 2)])
        dists = center_distances(arr[0], np.array([[1.0, 1.0], [4.0, 5.0]]))
        assert dists.tolist() == [0.0, 5.0]

    def test_contains_points(self) -> None:
        mask = contains_points(np.array([0.0, 0.0, 10.0, 10.0]), np.array([[10.0, 0.0], [10.5, 5.0]]))
        assert mask.tolist() == [True, False]

    def test_empty_array(self) -> None:
        assert boxes_to_array([]).shape == (0, 4)

    def test_validate_box_array_names_offending_row(self) -> None:
        arr = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [3, 3, 3, 4]], dtype=float)
        with pytest.raises(InvalidBoxError, match=r"pred_boxes\[2\]"):
            validate_box_array(arr, "pred_boxes")

    def test_validate_box_array_shape(self) -> None:
        with pytest.raises(InvalidBoxError, match="shape"):
            validate_box_array(np.zeros((2, 3)), "gt_boxes")
