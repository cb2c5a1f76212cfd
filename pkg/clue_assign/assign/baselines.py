"""Reference assigners the multi-clue selection is compared against.

- ``assign_iou_max``: classic max-IoU matching with positive and negative
  thresholds, an ignored band between them and low-quality claims so that every
  object with any overlap gets at least one positive.
- ``assign_center_distance``: nearest center, accepted within a radius
  proportional to the object's absolute size.
- ``assign_atss``: adaptive statistics on the IoUs of the center-nearest
  candidates (single candidate pool, no pyramid levels).

Positive confidences are the IoU with the assigned object for all three.
"""

import logging

import numpy as np

from ..error.exceptions import ConfigError
from ..geometry import areas_array, center_distances, contains_points, iou_one_to_many
from .mcss import Provisional, population_mean_std, resolve_duplicates, topk_by_center
from .scene import IGNORED, NEGATIVE, Assignment, Scene

logger = logging.getLogger(__name__)


def assign_iou_max(scene: Scene, pos_thresh: float = 0.5, neg_thresh: float = 0.5) -> Assignment:
    """Max-IoU assignment.

    A prediction is positive for its highest-IoU object when that IoU is at least
    ``pos_thresh``, negative below ``neg_thresh`` and ignored in between. Each
    object then claims its own best prediction if their IoU is above zero; a
    prediction claimed by several objects goes to the one with the highest IoU.
    Every tie resolves to the lower index.

    Raises:
        ConfigError: Unless ``0 <= neg_thresh <= pos_thresh <= 1``

    Example:
        >>> scene = Scene.from_arrays([[0, 0, 10, 10]], [0], [[0, 0, 10, 10], [50, 50, 60, 60]], [[0.0], [0.0]])
        >>> assign_iou_max(scene).assigned_gt.tolist()
        [0, -1]
    """
    if not 0.0 <= neg_thresh <= pos_thresh <= 1.0:
        raise ConfigError(
            "Invalid IoU thresholds",
            fields={"iou_neg_thresh": "must satisfy 0 <= iou_neg_thresh <= iou_pos_thresh <= 1"},
        )
    n, num_gts = scene.num_preds, scene.num_gts
    if num_gts == 0 or n == 0:
        return Assignment.all_negative(n, num_gts)

    max_iou = np.full(n, -1.0)
    argmax_gt = np.full(n, NEGATIVE, dtype=np.int64)
    best_pred = np.zeros(num_gts, dtype=np.int64)
    best_pred_iou = np.zeros(num_gts)
    for g in range(num_gts):
        ious = iou_one_to_many(scene.gt_array[g], scene.pred_array)
        better = ious > max_iou
        max_iou[better] = ious[better]
        argmax_gt[better] = g
        best_pred[g] = int(np.argmax(ious))
        best_pred_iou[g] = ious[best_pred[g]]

    assigned = np.where(max_iou >= pos_thresh, argmax_gt, np.where(max_iou < neg_thresh, NEGATIVE, IGNORED))
    confidences = np.where(assigned >= 0, max_iou, 0.0)

    claim_gt: dict[int, int] = {}
    for g in range(num_gts):
        iou_g = float(best_pred_iou[g])
        if iou_g <= 0.0:
            continue
        p = int(best_pred[g])
        holder = claim_gt.get(p)
        if holder is None or iou_g > best_pred_iou[holder]:
            claim_gt[p] = g
    for p, g in claim_gt.items():
        assigned[p] = g
        confidences[p] = best_pred_iou[g]

    return Assignment.from_verdict_arrays(assigned, confidences, num_gts, [pos_thresh] * num_gts)


def assign_center_distance(scene: Scene, radius_factor: float = 1.0) -> Assignment:
    """Nearest-center assignment within ``radius_factor`` times the object's absolute size.

    Each prediction considers only its nearest object (ties go to the lower
    index). The recorded threshold of an object is its radius in pixels.

    Raises:
        ConfigError: If ``radius_factor`` is not positive
    """
    if not radius_factor > 0.0:
        raise ConfigError("Invalid radius factor", fields={"radius_factor": "must be positive"})
    n, num_gts = scene.num_preds, scene.num_gts
    radii = radius_factor * np.sqrt(areas_array(scene.gt_array))
    if num_gts == 0 or n == 0:
        return Assignment.from_verdict_arrays(
            np.full(n, NEGATIVE, dtype=np.int64), np.zeros(n), num_gts, radii.tolist()
        )

    nearest_dist = np.full(n, np.inf)
    nearest_gt = np.full(n, NEGATIVE, dtype=np.int64)
    nearest_iou = np.zeros(n)
    for g in range(num_gts):
        gt_row = scene.gt_array[g]
        dist = center_distances(gt_row, scene.pred_centers)
        closer = dist < nearest_dist
        nearest_dist[closer] = dist[closer]
        nearest_gt[closer] = g
        nearest_iou[closer] = iou_one_to_many(gt_row, scene.pred_array)[closer]

    accepted = nearest_dist <= radii[nearest_gt]
    assigned = np.where(accepted, nearest_gt, NEGATIVE)
    confidences = np.where(accepted, nearest_iou, 0.0)
    return Assignment.from_verdict_arrays(assigned, confidences, num_gts, radii.tolist())


def assign_atss(scene: Scene, k: int = 9) -> Assignment:
    """Adaptive IoU threshold over the ``k`` center-nearest candidates of each object.

    The threshold is the mean plus the population standard deviation of the
    candidates' IoUs; a candidate is positive when its IoU reaches the threshold
    and its center lies inside the object. Duplicates keep the higher IoU.

    Raises:
        ConfigError: If ``k`` is not positive
    """
    if k < 1:
        raise ConfigError("Invalid candidate count", fields={"k": "must be a positive integer"})
    n, num_gts = scene.num_preds, scene.num_gts
    if num_gts == 0 or n == 0:
        return Assignment.all_negative(n, num_gts)

    provisional: list[Provisional] = []
    thresholds: list[float] = []
    for g in range(num_gts):
        gt_row = scene.gt_array[g]
        cand = topk_by_center(scene, g, k)
        ious = iou_one_to_many(gt_row, scene.pred_array[cand])
        mean, std = population_mean_std(ious)
        threshold = mean + std
        keep = (ious >= threshold) & contains_points(gt_row, scene.pred_centers[cand])
        provisional.append((cand[keep], ious[keep]))
        thresholds.append(threshold)

    result = resolve_duplicates(provisional, n, thresholds)
    logger.debug("atss: %d gts, %d positives", num_gts, int(result.positive_indices().size))
    return result
