"""Scene, configuration and assignment types shared by every assigner."""

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Self

import numpy as np
import numpy.typing as npt

from ..error.exceptions import ConfigError, InvalidSceneError
from ..geometry import BBox, FloatArray, boxes_to_array, centers_array, validate_box_array

IntArray = npt.NDArray[np.int64]

NEGATIVE = -1
IGNORED = -2


class BetaMode(enum.StrEnum):
    """How beta bounds the dynamic threshold.

    ``CAP`` applies ``min(mean + gamma * std, beta)`` exactly as the threshold is
    defined; ``FLOOR`` applies ``max(...)`` so that beta acts as a minimum quality bar.
    """

    CAP = "cap"
    FLOOR = "floor"


@dataclass(frozen=True, eq=False)
class Scene:
    """One image: ground truth boxes and labels, scored predictions.

    Attributes:
        gt_boxes: Ground truth boxes
        gt_labels: Category index of each ground truth, in ``[0, C)``
        pred_boxes: Predicted boxes
        pred_scores: ``N x C`` score matrix (raw logits unless the assign config
            flags probabilities)
        image_id: Opaque identifier carried into reports
        num_classes: Category count ``C``; only needed when ``pred_scores`` is empty
            and cannot carry it

    Raises:
        InvalidSceneError: If lengths, shapes or labels are inconsistent
    """

    gt_boxes: Sequence[BBox]
    gt_labels: Sequence[int]
    pred_boxes: Sequence[BBox]
    pred_scores: FloatArray
    image_id: str | int | None = None
    num_classes: int | None = None
    _gt_array: FloatArray = field(init=False, repr=False)
    _pred_array: FloatArray = field(init=False, repr=False)
    _pred_centers: FloatArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        gt_boxes = tuple(self.gt_boxes)
        pred_boxes = tuple(self.pred_boxes)
        gt_labels = tuple(int(label) for label in self.gt_labels)
        if len(gt_boxes) != len(gt_labels):
            raise InvalidSceneError(
                f"{len(gt_boxes)} ground truth boxes but {len(gt_labels)} labels", image_id=self._id_context()
            )

        scores = np.asarray(self.pred_scores, dtype=np.float64)
        if scores.size == 0 and scores.ndim != 2:
            if self.num_classes is None:
                raise InvalidSceneError("num_classes is required when pred_scores is empty")
            scores = scores.reshape(0, self.num_classes)
        if scores.ndim != 2:
            raise InvalidSceneError(f"pred_scores must be N x C, got shape {scores.shape}")
        if scores.shape[0] != len(pred_boxes):
            raise InvalidSceneError(
                f"pred_scores has {scores.shape[0]} rows for {len(pred_boxes)} predictions",
                image_id=self._id_context(),
            )
        if self.num_classes is not None and scores.shape[1] != self.num_classes:
            raise InvalidSceneError(f"pred_scores has {scores.shape[1]} columns, expected {self.num_classes}")
        if not np.isfinite(scores).all():
            raise InvalidSceneError("pred_scores contains non-finite values", image_id=self._id_context())
        num_classes = scores.shape[1]
        for g, label in enumerate(gt_labels):
            if not 0 <= label < num_classes:
                raise InvalidSceneError(
                    f"gt_labels[{g}] = {label} outside [0, {num_classes})", image_id=self._id_context()
                )

        scores.setflags(write=False)
        gt_array, pred_array = boxes_to_array(gt_boxes), boxes_to_array(pred_boxes)
        gt_array.setflags(write=False)
        pred_array.setflags(write=False)
        object.__setattr__(self, "gt_boxes", gt_boxes)
        object.__setattr__(self, "gt_labels", gt_labels)
        object.__setattr__(self, "pred_boxes", pred_boxes)
        object.__setattr__(self, "pred_scores", scores)
        object.__setattr__(self, "num_classes", num_classes)
        object.__setattr__(self, "_gt_array", gt_array)
        object.__setattr__(self, "_pred_array", pred_array)
        object.__setattr__(self, "_pred_centers", centers_array(pred_array))

    def _id_context(self) -> str | None:
        return None if self.image_id is None else str(self.image_id)

    @classmethod
    def from_arrays(
        cls,
        gt_boxes: npt.ArrayLike,
        gt_labels: Iterable[int],
        pred_boxes: npt.ArrayLike,
        pred_scores: npt.ArrayLike,
        image_id: str | int | None = None,
        num_classes: int | None = None,
    ) -> Self:
        """Build a scene from ``(n, 4)`` corner arrays.

        Raises:
            InvalidBoxError: If any row is not a valid box
            InvalidSceneError: If the parts are inconsistent
        """
        gt = validate_box_array(np.asarray(gt_boxes, dtype=np.float64).reshape(-1, 4), "gt_boxes")
        pred = validate_box_array(np.asarray(pred_boxes, dtype=np.float64).reshape(-1, 4), "pred_boxes")
        return cls(
            gt_boxes=[BBox(*row) for row in gt.tolist()],
            gt_labels=list(gt_labels),
            pred_boxes=[BBox(*row) for row in pred.tolist()],
            pred_scores=np.asarray(pred_scores, dtype=np.float64),
            image_id=image_id,
            num_classes=num_classes,
        )

    @property
    def num_gts(self) -> int:
        return len(self.gt_boxes)

    @property
    def num_preds(self) -> int:
        return len(self.pred_boxes)

    @property
    def gt_array(self) -> FloatArray:
        """Ground truth boxes as a read-only ``(G, 4)`` array."""
        return self._gt_array

    @property
    def pred_array(self) -> FloatArray:
        """Predicted boxes as a read-only ``(N, 4)`` array."""
        return self._pred_array

    @property
    def pred_centers(self) -> FloatArray:
        return self._pred_centers


@dataclass(frozen=True)
class AssignConfig:
    """Hyperparameters of the assigners.

    Defaults: ``k=9``, ``alpha=0.3``, ``beta=0.6``,
    ``s_max=32`` (the largest absolute size still counted as small) and a cap of 3
    on the standard ratio.

    Raises:
        ConfigError: If any value is outside its bounds
    """

    k: int = 9
    alpha: float = 0.3
    beta: float = 0.6
    s_max: float = 32.0
    gamma_cap: float = 3.0
    scores_are_probabilities: bool = False
    beta_mode: BetaMode = BetaMode.CAP
    iou_pos_thresh: float = 0.5
    iou_neg_thresh: float = 0.5
    radius_factor: float = 1.0

    def __post_init__(self) -> None:
        errors: dict[str, str] = {}
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
            errors["k"] = "must be a positive integer"
        if not 0.0 <= self.alpha <= 1.0:
            errors["alpha"] = "must lie in [0, 1]"
        if not 0.0 < self.beta <= 1.0:
            errors["beta"] = "must lie in (0, 1]"
        if not self.s_max > 0.0:
            errors["s_max"] = "must be positive"
        if not self.gamma_cap > 0.0:
            errors["gamma_cap"] = "must be positive"
        if not 0.0 <= self.iou_neg_thresh <= self.iou_pos_thresh <= 1.0:
            errors["iou_neg_thresh"] = "must satisfy 0 <= iou_neg_thresh <= iou_pos_thresh <= 1"
        if not self.radius_factor > 0.0:
            errors["radius_factor"] = "must be positive"
        try:
            object.__setattr__(self, "beta_mode", BetaMode(self.beta_mode))
        except ValueError:
            errors["beta_mode"] = f"must be one of {[m.value for m in BetaMode]}"
        if errors:
            raise ConfigError("Invalid assign configuration", fields=errors)


@dataclass(frozen=True)
class Positive:
    """Prediction assigned to ground truth ``gt_index``."""

    gt_index: int
    confidence: float


@dataclass(frozen=True)
class Negative:
    """Prediction assigned to background."""


@dataclass(frozen=True)
class Ignored:
    """Prediction excluded from both sets (max-IoU band between the two thresholds)."""


Verdict = Positive | Negative | Ignored


@dataclass(frozen=True, eq=False)
class Assignment:
    """Outcome of one assigner on one scene.

    Attributes:
        assigned_gt: Per prediction, the ground truth index of a positive verdict,
            ``NEGATIVE`` (-1) or ``IGNORED`` (-2)
        confidences: Per prediction, the confidence behind a positive verdict
            (0.0 for the other verdicts)
        per_gt_positives: For each ground truth, its positive prediction indices
            in ascending order
        thresholds: For each ground truth, the threshold the assigner applied
    """

    assigned_gt: IntArray
    confidences: FloatArray
    per_gt_positives: tuple[tuple[int, ...], ...]
    thresholds: tuple[float, ...]

    @classmethod
    def from_verdict_arrays(
        cls,
        assigned_gt: IntArray,
        confidences: FloatArray,
        num_gts: int,
        thresholds: Sequence[float],
    ) -> "Assignment":
        """Build an assignment and derive the per-GT positive lists."""
        assigned_gt = np.asarray(assigned_gt, dtype=np.int64)
        confidences = np.asarray(confidences, dtype=np.float64)
        per_gt: list[list[int]] = [[] for _ in range(num_gts)]
        for p in np.flatnonzero(assigned_gt >= 0).tolist():
            per_gt[int(assigned_gt[p])].append(p)
        assigned_gt.setflags(write=False)
        confidences.setflags(write=False)
        return cls(
            assigned_gt=assigned_gt,
            confidences=confidences,
            per_gt_positives=tuple(tuple(ps) for ps in per_gt),
            thresholds=tuple(float(t) for t in thresholds),
        )

    @classmethod
    def all_negative(cls, num_preds: int, num_gts: int = 0) -> "Assignment":
        return cls.from_verdict_arrays(
            np.full(num_preds, NEGATIVE, dtype=np.int64),
            np.zeros(num_preds, dtype=np.float64),
            num_gts,
            [0.0] * num_gts,
        )

    @property
    def num_preds(self) -> int:
        return int(self.assigned_gt.shape[0])

    @property
    def per_pred(self) -> tuple[Verdict, ...]:
        """Per-prediction verdict objects."""
        verdicts: list[Verdict] = []
        negative, ignored = Negative(), Ignored()
        for g, conf in zip(self.assigned_gt.tolist(), self.confidences.tolist(), strict=True):
            if g >= 0:
                verdicts.append(Positive(g, conf))
            elif g == IGNORED:
                verdicts.append(ignored)
            else:
                verdicts.append(negative)
        return tuple(verdicts)

    def positive_indices(self) -> IntArray:
        return np.flatnonzero(self.assigned_gt >= 0)

    def negative_indices(self) -> IntArray:
        return np.flatnonzero(self.assigned_gt == NEGATIVE)

    def ignored_indices(self) -> IntArray:
        return np.flatnonzero(self.assigned_gt == IGNORED)

    def positive_counts(self) -> list[int]:
        """Number of positives for each ground truth."""
        return [len(ps) for ps in self.per_gt_positives]

    def to_records(self) -> list[dict[str, object]]:
        """Per-prediction rows: index, verdict, gt index (or None), confidence."""
        records: list[dict[str, object]] = []
        for p, verdict in enumerate(self.per_pred):
            if isinstance(verdict, Positive):
                records.append(
                    {"index": p, "verdict": "positive", "gt_index": verdict.gt_index, "confidence": verdict.confidence}
                )
            else:
                name = "ignored" if isinstance(verdict, Ignored) else "negative"
                records.append({"index": p, "verdict": name, "gt_index": None, "confidence": None})
        return records
