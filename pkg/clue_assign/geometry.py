"""Axis-aligned box geometry.

Boxes are stored in corner format ``(x1, y1, x2, y2)`` in pixel coordinates;
``BBox.from_xywh`` converts from the ``(x, y, w, h)`` layout used by annotation
files. A ``BBox`` can only be constructed with finite coordinates and strictly
positive width and height, so every operation below is total.

The scalar functions operate on ``BBox`` values. The ``*_array`` helpers work on
``(n, 4)`` float64 arrays and evaluate the same arithmetic in the same order, so a
batch IoU equals the scalar IoU bit for bit.
"""

import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Self

import numpy as np
import numpy.typing as npt

from .error.exceptions import InvalidBoxError

FloatArray = npt.NDArray[np.float64]
BoolArray = npt.NDArray[np.bool_]


@dataclass(frozen=True, slots=True)
class Point:
    """A point in pixel coordinates."""

    x: float
    y: float


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned box in corner format.

    Raises:
        InvalidBoxError: If a coordinate is not finite or the box has zero or
            negative width or height
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBoxError(f"non-finite coordinates {list(coords)}")
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise InvalidBoxError(f"box {list(coords)} has non-positive width or height")

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> Self:
        """Build a box from top-left corner, width and height."""
        return cls(float(x), float(y), float(x) + float(w), float(y) + float(h))

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> Self:
        """Build a box from its center, width and height."""
        return cls(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def to_xywh(self) -> tuple[float, float, float, float]:
        """Return ``(x, y, w, h)``."""
        return (self.x1, self.y1, self.width, self.height)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)


def area(b: BBox) -> float:
    """Area of a box, ``(x2 - x1) * (y2 - y1)``.

    Example:
        >>> area(BBox(2, 3, 4, 9))
        12.0
    """
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when they are disjoint.

    Example:
        >>> round(iou(BBox(0, 0, 10, 10), BBox(5, 5, 15, 15)), 6)
        0.142857
    """
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = iw * ih
    union = area(a) + area(b) - inter
    return inter / union


def center(b: BBox) -> Point:
    """Center of a box."""
    return Point((b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0)


def center_distance(a: BBox, b: BBox) -> float:
    """Euclidean distance between the centers of two boxes."""
    ca, cb = center(a), center(b)
    return math.hypot(ca.x - cb.x, ca.y - cb.y)


def contains_center(gt: BBox, cand: BBox) -> bool:
    """Whether the center of ``cand`` lies inside ``gt``, boundary inclusive."""
    c = center(cand)
    return gt.x1 <= c.x <= gt.x2 and gt.y1 <= c.y <= gt.y2


def absolute_size(b: BBox) -> float:
    """Square root of the box area, in pixels."""
    return math.sqrt(area(b))


# batch helpers


def boxes_to_array(boxes: Iterable[BBox]) -> FloatArray:
    """Stack boxes into an ``(n, 4)`` float64 array (``(0, 4)`` when empty)."""
    rows = [b.as_tuple() for b in boxes]
    if not rows:
        return np.zeros((0, 4), dtype=np.float64)
    return np.asarray(rows, dtype=np.float64)


def validate_box_array(arr: FloatArray, name: str = "boxes") -> FloatArray:
    """Check an ``(n, 4)`` corner array with the same rules as ``BBox``.

    Returns:
        The array as contiguous float64

    Raises:
        InvalidBoxError: On wrong shape, non-finite values or non-positive extent
    """
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise InvalidBoxError(f"{name} must have shape (n, 4), got {arr.shape}")
    if not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise InvalidBoxError(f"{name}[{bad}] has non-finite coordinates", index=bad)
    degenerate = (arr[:, 2] <= arr[:, 0]) | (arr[:, 3] <= arr[:, 1])
    if degenerate.any():
        bad = int(np.flatnonzero(degenerate)[0])
        raise InvalidBoxError(f"{name}[{bad}] has non-positive width or height", index=bad)
    return arr


def areas_array(arr: FloatArray) -> FloatArray:
    return (arr[:, 2] - arr[:, 0]) * (arr[:, 3] - arr[:, 1])


def centers_array(arr: FloatArray) -> FloatArray:
    """Centers of an ``(n, 4)`` array as ``(n, 2)``."""
    return np.stack(((arr[:, 0] + arr[:, 2]) / 2.0, (arr[:, 1] + arr[:, 3]) / 2.0), axis=1)


def iou_one_to_many(box: FloatArray, arr: FloatArray) -> FloatArray:
    """IoU of one corner row against every row of ``arr``."""
    iw = np.maximum(0.0, np.minimum(box[2], arr[:, 2]) - np.maximum(box[0], arr[:, 0]))
    ih = np.maximum(0.0, np.minimum(box[3], arr[:, 3]) - np.maximum(box[1], arr[:, 1]))
    inter = iw * ih
    box_area = (box[2] - box[0]) * (box[3] - box[1])
    union = box_area + areas_array(arr) - inter
    return inter / union


def center_distances(box: FloatArray, centers: FloatArray) -> FloatArray:
    """Distances from the center of one corner row to each of ``centers`` (``(n, 2)``)."""
    cx = (box[0] + box[2]) / 2.0
    cy = (box[1] + box[3]) / 2.0
    return np.hypot(centers[:, 0] - cx, centers[:, 1] - cy)


def contains_points(box: FloatArray, points: FloatArray) -> BoolArray:
    """Boundary-inclusive containment of ``(n, 2)`` points in one corner row."""
    return (
        (points[:, 0] >= box[0]) & (points[:, 0] <= box[2]) & (points[:, 1] >= box[1]) & (points[:, 1] <= box[3])
    )
