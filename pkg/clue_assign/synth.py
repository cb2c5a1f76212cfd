"""Seeded synthetic scenes spanning the small-object size spectrum.

Each scene holds ``n_gt`` ground truths whose absolute sizes are drawn
log-uniformly from ``size_range`` and ``preds_per_gt`` noisy predictions around
each of them, plus ``clutter_per_image`` background proposals scattered over the
image. Prediction centers are jittered with a standard deviation combining a
part relative to the object size and an absolute pixel floor, so small objects
suffer the same pixel-level localisation error real detectors make. The
true-class logit of every prediction is tied to its IoU with the object it
belongs to, so category confidence carries real signal.

A scene is a pure function of ``(cfg, index)``.

Example:
    >>> scene = generate_scene(get_preset("tiny"), index=0)
    >>> scene.num_gts
    3
"""

import dataclasses
import enum
import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .assign.scene import Scene
from .error.exceptions import ConfigError, InvalidBoxError, SceneGenerationError
from .geometry import BBox, FloatArray, iou_one_to_many

logger = logging.getLogger(__name__)

LOGIT_CLIP = 1e-4
CLUTTER_PARENT = -1


class SizeBucket(enum.StrEnum):
    """Area buckets used to stratify small-object statistics (areas in px²)."""

    EXTREMELY_SMALL = "eS"
    RELATIVELY_SMALL = "rS"
    GENERALLY_SMALL = "gS"
    NORMAL = "Normal"


BUCKET_UPPER_BOUNDS: tuple[tuple[SizeBucket, float], ...] = (
    (SizeBucket.EXTREMELY_SMALL, 144.0),
    (SizeBucket.RELATIVELY_SMALL, 400.0),
    (SizeBucket.GENERALLY_SMALL, 1024.0),
)


def size_bucket(area: float) -> SizeBucket:
    """Bucket of a box area; upper bounds are inclusive.

    Raises:
        InvalidBoxError: If ``area`` is not positive

    Example:
        >>> size_bucket(144.0), size_bucket(145.0), size_bucket(4096.0)
        (<SizeBucket.EXTREMELY_SMALL: 'eS'>, <SizeBucket.RELATIVELY_SMALL: 'rS'>, <SizeBucket.NORMAL: 'Normal'>)
    """
    if not area > 0.0:
        raise InvalidBoxError(f"area must be positive, got {area}")
    for bucket, upper in BUCKET_UPPER_BOUNDS:
        if area <= upper:
            return bucket
    return SizeBucket.NORMAL


class SizeSampling(enum.StrEnum):
    LOG_UNIFORM = "log-uniform"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the scene generator.

    Attributes:
        seed: Base seed; scene ``i`` draws from ``SeedSequence([seed, i])``
        image_size: ``(W, H)`` in pixels
        n_gt: Ground truths per scene
        size_range: ``(min, max)`` absolute size in pixels; the largest box the
            aspect range allows must fit inside the image
        size_sampling: ``log-uniform`` (default) or ``uniform``
        aspect_range: ``(min, max)`` of width/height
        preds_per_gt: Predictions generated around each ground truth
        center_jitter_sigma: Center noise as a fraction of the object's absolute size
        center_jitter_px: Absolute center noise floor in pixels, combined in
            quadrature with the relative part
        scale_jitter_sigma: Log-space noise on prediction width and height
        score_noise_sigma: Normal noise added to every class logit
        n_classes: Category count ``C``
        clutter_per_image: Background proposals not tied to any object
        max_attempts: Placement attempts per box before giving up
    """

    seed: int = 0
    image_size: tuple[int, int] = (512, 512)
    n_gt: int = 10
    size_range: tuple[float, float] = (4.0, 256.0)
    size_sampling: SizeSampling = SizeSampling.LOG_UNIFORM
    aspect_range: tuple[float, float] = (0.5, 2.0)
    preds_per_gt: int = 16
    center_jitter_sigma: float = 0.1
    center_jitter_px: float = 3.0
    scale_jitter_sigma: float = 0.1
    score_noise_sigma: float = 0.5
    n_classes: int = 9
    clutter_per_image: int = 800
    max_attempts: int = 1000

    def __post_init__(self) -> None:
        errors: dict[str, str] = {}
        width, height = self.image_size
        lo, hi = self.size_range
        if width <= 0 or height <= 0:
            errors["image_size"] = "width and height must be positive"
        if not 0.0 < lo <= hi:
            errors["size_range"] = "must satisfy 0 < min <= max"
        if not 0.0 < self.aspect_range[0] <= self.aspect_range[1]:
            errors["aspect_range"] = "must satisfy 0 < min <= max"
        if self.n_gt < 1:
            errors["n_gt"] = "must be at least 1"
        if self.preds_per_gt < 1:
            errors["preds_per_gt"] = "must be at least 1"
        if self.n_classes < 1:
            errors["n_classes"] = "must be at least 1"
        if self.clutter_per_image < 0:
            errors["clutter_per_image"] = "must be nonnegative"
        if self.max_attempts < 1:
            errors["max_attempts"] = "must be at least 1"
        if not errors.keys() & {"image_size", "size_range", "aspect_range"}:
            widest, tallest = hi * math.sqrt(self.aspect_range[1]), hi / math.sqrt(self.aspect_range[0])
            if widest > width or tallest > height:
                errors["size_range"] = (
                    f"largest box ({widest:.1f}x{tallest:.1f}) does not fit inside the {width}x{height} image"
                )
        for name in ("center_jitter_sigma", "center_jitter_px", "scale_jitter_sigma", "score_noise_sigma"):
            if getattr(self, name) < 0.0:
                errors[name] = "must be nonnegative"
        try:
            object.__setattr__(self, "size_sampling", SizeSampling(self.size_sampling))
        except ValueError:
            errors["size_sampling"] = f"must be one of {[s.value for s in SizeSampling]}"
        if errors:
            raise ConfigError("Invalid synth configuration", fields=errors)

    def replace(self, **changes: Any) -> "SynthConfig":
        return dataclasses.replace(self, **changes)


PRESETS: dict[str, SynthConfig] = {
    "default": SynthConfig(),
    "tiny": SynthConfig(
        image_size=(128, 128),
        n_gt=3,
        size_range=(4.0, 64.0),
        preds_per_gt=4,
        clutter_per_image=8,
    ),
}


def get_preset(name: str) -> SynthConfig:
    """Named generator configuration.

    Raises:
        ConfigError: If no preset has that name
    """
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"Unknown synth preset '{name}'", fields={"synth": f"must be one of {sorted(PRESETS)}"}
        ) from None


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    """A generated scene and, per prediction, the ground truth it was drawn around.

    ``parents[p]`` is ``-1`` for clutter proposals.
    """

    scene: Scene
    parents: np.ndarray


def _rng(cfg: SynthConfig, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, index])))


def _sample_sizes(rng: np.random.Generator, cfg: SynthConfig, n: int) -> FloatArray:
    lo, hi = cfg.size_range
    if cfg.size_sampling == SizeSampling.UNIFORM:
        return rng.uniform(lo, hi, n)
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def _sample_aspects(rng: np.random.Generator, cfg: SynthConfig, n: int) -> FloatArray:
    lo, hi = cfg.aspect_range
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def _corners(cx: FloatArray, cy: FloatArray, w: FloatArray, h: FloatArray) -> FloatArray:
    return np.stack((cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0), axis=1)


def _place(rng: np.random.Generator, cfg: SynthConfig, w: float, h: float, index: int) -> tuple[float, float]:
    width, height = cfg.image_size
    for _ in range(cfg.max_attempts):
        cx, cy = rng.uniform(0.0, width), rng.uniform(0.0, height)
        if cx - w / 2.0 >= 0.0 and cy - h / 2.0 >= 0.0 and cx + w / 2.0 <= width and cy + h / 2.0 <= height:
            return float(cx), float(cy)
    raise SceneGenerationError(
        f"could not place a {w:.1f}x{h:.1f} box inside {width}x{height} in {cfg.max_attempts} attempts",
        index=index,
        attempts=cfg.max_attempts,
    )


def _clip_to_image(cfg: SynthConfig, cx: FloatArray, cy: FloatArray, w: FloatArray, h: FloatArray) -> FloatArray:
    width, height = cfg.image_size
    cx = np.clip(cx, 0.0, width)
    cy = np.clip(cy, 0.0, height)
    boxes = _corners(cx, cy, w, h)
    boxes[:, 0::2] = np.clip(boxes[:, 0::2], 0.0, width)
    boxes[:, 1::2] = np.clip(boxes[:, 1::2], 0.0, height)
    return boxes


def _logit(p: FloatArray) -> FloatArray:
    p = np.clip(p, LOGIT_CLIP, 1.0 - LOGIT_CLIP)
    return np.log(p) - np.log1p(-p)


def generate_synthetic(cfg: SynthConfig, index: int) -> SyntheticScene:
    """Generate scene ``index`` together with its prediction parents.

    Raises:
        SceneGenerationError: If a ground truth cannot be placed within
            ``cfg.max_attempts`` attempts
    """
    rng = _rng(cfg, index)

    sizes = _sample_sizes(rng, cfg, cfg.n_gt)
    aspects = _sample_aspects(rng, cfg, cfg.n_gt)
    gt_w = sizes * np.sqrt(aspects)
    gt_h = sizes / np.sqrt(aspects)
    centers = np.array([_place(rng, cfg, float(w), float(h), index) for w, h in zip(gt_w, gt_h, strict=True)])
    gt_boxes = _corners(centers[:, 0], centers[:, 1], gt_w, gt_h)
    gt_labels = rng.integers(0, cfg.n_classes, cfg.n_gt)

    parents = np.repeat(np.arange(cfg.n_gt), cfg.preds_per_gt)
    sigma = np.hypot(cfg.center_jitter_sigma * sizes, cfg.center_jitter_px)[parents]
    n_near = parents.shape[0]
    pred_cx = centers[parents, 0] + sigma * rng.standard_normal(n_near)
    pred_cy = centers[parents, 1] + sigma * rng.standard_normal(n_near)
    pred_w = gt_w[parents] * np.exp(cfg.scale_jitter_sigma * rng.standard_normal(n_near))
    pred_h = gt_h[parents] * np.exp(cfg.scale_jitter_sigma * rng.standard_normal(n_near))
    near = _clip_to_image(cfg, pred_cx, pred_cy, pred_w, pred_h)

    n_clutter = cfg.clutter_per_image
    width, height = cfg.image_size
    c_sizes = _sample_sizes(rng, cfg, n_clutter)
    c_aspects = _sample_aspects(rng, cfg, n_clutter)
    clutter = _clip_to_image(
        cfg,
        rng.uniform(0.0, width, n_clutter),
        rng.uniform(0.0, height, n_clutter),
        c_sizes * np.sqrt(c_aspects),
        c_sizes / np.sqrt(c_aspects),
    )

    pred_boxes = np.concatenate((near, clutter))
    all_parents = np.concatenate((parents, np.full(n_clutter, CLUTTER_PARENT)))

    # true-class IoU: parent for near predictions, best-overlapping object for clutter
    iou_matrix = np.stack([iou_one_to_many(gt, pred_boxes) for gt in gt_boxes])
    owner = np.where(all_parents >= 0, all_parents, np.argmax(iou_matrix, axis=0))
    true_iou = iou_matrix[owner, np.arange(pred_boxes.shape[0])]

    scores = cfg.score_noise_sigma * rng.standard_normal((pred_boxes.shape[0], cfg.n_classes))
    scores[np.arange(pred_boxes.shape[0]), gt_labels[owner]] += _logit(true_iou)

    scene = Scene(
        gt_boxes=[BBox(*row) for row in gt_boxes.tolist()],
        gt_labels=gt_labels.tolist(),
        pred_boxes=[BBox(*row) for row in pred_boxes.tolist()],
        pred_scores=scores,
        image_id=index,
    )
    return SyntheticScene(scene, all_parents)


def generate_scene(cfg: SynthConfig, index: int) -> Scene:
    """Generate scene ``index``; identical for identical ``(cfg, index)``.

    Raises:
        SceneGenerationError: If placement exceeds the attempt budget
    """
    return generate_synthetic(cfg, index).scene


def generate_scenes(cfg: SynthConfig, n: int, start: int = 0) -> list[Scene]:
    """Scenes ``start .. start + n - 1``."""
    scenes = [generate_scene(cfg, i) for i in range(start, start + n)]
    logger.info("Generated %d synthetic scenes (seed=%d)", len(scenes), cfg.seed)
    return scenes
