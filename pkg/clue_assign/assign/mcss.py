"""Multi-clue sample selection.

For every ground truth the assigner picks the ``k`` predictions with the nearest
centers, scores each candidate with a blend of category confidence and IoU, and
keeps the candidates whose blended confidence reaches a per-object threshold and
whose center lies inside the object. The threshold is derived from the candidate
statistics and scaled by the object's absolute size, so small objects face a lower
bar than large ones. A prediction accepted by several objects is kept by the one
that gives it the highest confidence.

All per-object work is vectorised over predictions; memory stays ``O(N)`` per
object, so scenes with hundreds of thousands of predictions fit comfortably.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from ..error.exceptions import EmptyInputError, LengthMismatchError, ProbabilityRangeError
from ..geometry import FloatArray, areas_array, center_distances, contains_points, iou_one_to_many
from .scene import NEGATIVE, AssignConfig, Assignment, BetaMode, IntArray, Scene

logger = logging.getLogger(__name__)

Provisional = tuple[IntArray, FloatArray]


def topk_by_center(scene: Scene, g: int, k: int) -> IntArray:
    """Indices of the ``k`` predictions whose centers are nearest to ground truth ``g``.

    The result is ordered by ``(distance, index)``; equal distances go to the lower
    prediction index. When the scene has ``k`` or fewer predictions all of them are
    returned.

    Args:
        scene: Scene to select from
        g: Ground truth index
        k: Number of candidates

    Returns:
        Prediction indices, at most ``k`` of them
    """
    distances = center_distances(scene.gt_array[g], scene.pred_centers)
    n = distances.shape[0]
    if n > k:
        kth = np.partition(distances, k - 1)[k - 1]
        pool = np.flatnonzero(distances <= kth)
    else:
        pool = np.arange(n)
    order = np.lexsort((pool, distances[pool]))
    return pool[order][:k].astype(np.int64)


def sigmoid(x: npt.ArrayLike) -> FloatArray:
    """Logistic function, ``1 / (1 + exp(-x))``."""
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def category_confidence(scene: Scene, cand: IntArray, g: int, scores_are_probabilities: bool = False) -> FloatArray:
    """Category confidence of each candidate for the class of ground truth ``g``.

    Raw logits go through a sigmoid. Scores flagged as probabilities are used as
    they are and must lie in ``[0, 1]``.

    Raises:
        ProbabilityRangeError: If flagged probabilities fall outside ``[0, 1]``

    Example:
        >>> scene = Scene.from_arrays([[0, 0, 4, 4]], [0], [[0, 0, 4, 4]], [[0.0]])
        >>> category_confidence(scene, np.array([0]), 0).tolist()
        [0.5]
    """
    raw = scene.pred_scores[cand, scene.gt_labels[g]]
    if scores_are_probabilities:
        if raw.size and (raw.min() < 0.0 or raw.max() > 1.0):
            raise ProbabilityRangeError(
                f"scores flagged as probabilities must lie in [0, 1], got range [{raw.min()}, {raw.max()}]"
            )
        return raw.astype(np.float64, copy=True)
    return sigmoid(raw)


def multi_clue_confidence(d_c: npt.ArrayLike, d_iou: npt.ArrayLike, alpha: float) -> FloatArray:
    """Blend category confidence and IoU: ``alpha * d_c + (1 - alpha) * d_iou``.

    Raises:
        LengthMismatchError: If the two vectors differ in length
    """
    d_c = np.asarray(d_c, dtype=np.float64)
    d_iou = np.asarray(d_iou, dtype=np.float64)
    if d_c.shape != d_iou.shape:
        raise LengthMismatchError(f"category confidence has {d_c.size} entries, IoU has {d_iou.size}")
    return alpha * d_c + (1.0 - alpha) * d_iou


def standard_ratio(s_g: float, s_max: float, cap: float = 3.0) -> float:
    """Size multiplier of the threshold's spread term, ``min(s_g / s_max, cap)``.

    Example:
        >>> standard_ratio(128.0, 32.0)
        3.0
    """
    return min(s_g / s_max, cap)


def population_mean_std(values: Sequence[float] | FloatArray) -> tuple[float, float]:
    """Mean and population standard deviation (divide by count).

    When all values are equal the mean is that value and the deviation is exactly
    0, whatever rounding the summation would introduce.

    Raises:
        EmptyInputError: If ``values`` is empty
    """
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyInputError("statistics of an empty candidate set")
    first = vals[0]
    if all(v == first for v in vals):
        return first, 0.0
    n = len(vals)
    mean = math.fsum(vals) / n
    variance = math.fsum((v - mean) * (v - mean) for v in vals) / n
    return mean, math.sqrt(variance)


def dynamic_threshold(
    d: Sequence[float] | FloatArray,
    gamma: float,
    beta: float,
    mode: BetaMode = BetaMode.CAP,
) -> float:
    """Per-object acceptance threshold, ``min(mean + gamma * std, beta)``.

    With ``mode=BetaMode.FLOOR`` the bound becomes ``max(...)``.

    Raises:
        EmptyInputError: If ``d`` is empty

    Example:
        >>> dynamic_threshold([0.4], gamma=2.0, beta=0.6)
        0.4
    """
    mean, std = population_mean_std(d)
    spread = mean + gamma * std
    if mode == BetaMode.FLOOR:
        return max(spread, beta)
    return min(spread, beta)


def resolve_duplicates(
    provisional: Sequence[Provisional],
    num_preds: int,
    thresholds: Sequence[float] | None = None,
) -> Assignment:
    """Keep each prediction only for the ground truth that rates it highest.

    Args:
        provisional: For each ground truth, its provisional positive prediction
            indices and their confidences
        num_preds: Number of predictions in the scene
        thresholds: Per ground truth thresholds to record (zeros when omitted)

    Returns:
        Assignment where every prediction is positive for at most one ground truth;
        confidence ties go to the lower ground truth index
    """
    best_gt = np.full(num_preds, NEGATIVE, dtype=np.int64)
    best_conf = np.full(num_preds, -np.inf, dtype=np.float64)
    for g, (idx, conf) in enumerate(provisional):
        idx = np.asarray(idx, dtype=np.int64)
        conf = np.asarray(conf, dtype=np.float64)
        wins = conf > best_conf[idx]
        best_conf[idx[wins]] = conf[wins]
        best_gt[idx[wins]] = g

    confidences = np.where(best_gt >= 0, best_conf, 0.0)
    if thresholds is None:
        thresholds = [0.0] * len(provisional)
    return Assignment.from_verdict_arrays(best_gt, confidences, len(provisional), thresholds)


def assign_mcss(scene: Scene, cfg: AssignConfig | None = None) -> Assignment:
    """Assign predictions to ground truths with multi-clue sample selection.

    Args:
        scene: Scene to assign
        cfg: Assigner hyperparameters (defaults when omitted)

    Returns:
        Assignment with at most ``cfg.k`` positives per ground truth and the
        threshold used for each

    Example:
        >>> scene = Scene.from_arrays([[0, 0, 10, 10]], [0], [[0, 0, 10, 10]], [[20.0]])
        >>> result = assign_mcss(scene)
        >>> result.per_gt_positives, result.thresholds
        (((0,),), (0.6,))
    """
    cfg = cfg or AssignConfig()
    if scene.num_gts == 0:
        return Assignment.all_negative(scene.num_preds)
    if scene.num_preds == 0:
        return Assignment.all_negative(0, scene.num_gts)

    sizes = np.sqrt(areas_array(scene.gt_array))
    provisional: list[Provisional] = []
    thresholds: list[float] = []
    for g in range(scene.num_gts):
        gt_row = scene.gt_array[g]
        cand = topk_by_center(scene, g, cfg.k)
        d_c = category_confidence(scene, cand, g, cfg.scores_are_probabilities)
        d_iou = iou_one_to_many(gt_row, scene.pred_array[cand])
        d = multi_clue_confidence(d_c, d_iou, cfg.alpha)
        gamma = standard_ratio(float(sizes[g]), cfg.s_max, cfg.gamma_cap)
        t_g = dynamic_threshold(d, gamma, cfg.beta, cfg.beta_mode)
        keep = (d >= t_g) & contains_points(gt_row, scene.pred_centers[cand])
        provisional.append((cand[keep], d[keep]))
        thresholds.append(t_g)

    result = resolve_duplicates(provisional, scene.num_preds, thresholds)
    logger.debug(
        "mcss: %d gts, %d preds, %d positives", scene.num_gts, scene.num_preds, int(result.positive_indices().size)
    )
    return result
