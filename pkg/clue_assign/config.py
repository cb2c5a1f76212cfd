"""Run configuration: one TOML file validated by marshmallow into frozen dataclasses.

Every key is optional; missing keys take the defaults of the matching dataclass.
Unknown keys are rejected so that a typo never silently falls back to a default.

Example:
    >>> cfg = load_config(None)
    >>> cfg.assign.k, cfg.memory.dim, cfg.harness.threads
    (9, 1024, 0)

A file overriding a few values::

    [assign]
    beta = 0.5
    beta_mode = "floor"

    [synth]
    n_gt = 20
    size_range = [4.0, 128.0]

    [harness]
    threads = 4
"""

import dataclasses
import logging
import os
import tomllib
from dataclasses import dataclass, field
from typing import Any

import marshmallow as ma

from .assign.registry import AssignerName, available_assigners
from .assign.scene import AssignConfig, BetaMode
from .error.exceptions import ConfigError
from .ingest.reports import ReportFormat
from .ingest.schemas import flatten_messages
from .synth import SizeSampling, SynthConfig

logger = logging.getLogger(__name__)

CONFIG_KEY = "CLUE_ASSIGN"


@dataclass(frozen=True)
class MemoryConfig:
    """Memory bank and ``memory-sim`` parameters.

    Attributes:
        num_classes: Foreground categories ``C`` (the memory has ``C + 1`` rows)
        dim: Feature width ``D``
        momentum: EMA blend factor
        seed: Initialisation seed
        scale: Initialisation standard deviation; ``1 / sqrt(dim)`` when unset
        eps: Threshold below which aggregation weights fall back to uniform
        iterations: ``memory-sim`` update steps
        samples_per_class: Features drawn per category and step in ``memory-sim``
        cluster_spread: Standard deviation of simulated features around their
            cluster mean
    """

    num_classes: int = 9
    dim: int = 1024
    momentum: float = 0.01
    seed: int = 0
    scale: float | None = None
    eps: float = 1e-8
    iterations: int = 100
    samples_per_class: int = 8
    cluster_spread: float = 0.1


@dataclass(frozen=True)
class EnhanceConfig:
    """Parameter initialisation for the enhancement pass.

    Region features are ``(N, in_channels, roi_size, roi_size)`` and flatten to
    ``in_channels * roi_size**2`` columns; the embedding width is the memory's ``dim``.
    """

    in_channels: int = 16
    roi_size: int = 7
    num_heads: int = 1
    seed: int = 0
    bias_scale: float = 0.1

    @property
    def in_features(self) -> int:
        return self.in_channels * self.roi_size * self.roi_size


@dataclass(frozen=True)
class RunConfig:
    """Harness-level options; ``threads = 0`` means the available parallelism."""

    threads: int = 0
    scenes: int = 100
    assigners: tuple[str, ...] = tuple(available_assigners())
    format: ReportFormat = ReportFormat.JSON


@dataclass(frozen=True)
class HarnessConfig:
    """Everything a run needs, one dataclass per TOML section."""

    assign: AssignConfig = field(default_factory=AssignConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    enhance: EnhanceConfig = field(default_factory=EnhanceConfig)
    harness: RunConfig = field(default_factory=RunConfig)

    def with_seed(self, seed: int) -> "HarnessConfig":
        """Apply one seed to every seeded component."""
        return dataclasses.replace(
            self,
            synth=dataclasses.replace(self.synth, seed=seed),
            memory=dataclasses.replace(self.memory, seed=seed),
            enhance=dataclasses.replace(self.enhance, seed=seed),
        )

    def with_overrides(self, **changes: Any) -> "HarnessConfig":
        """Replace ``harness`` section values; ``None`` values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        if not changes:
            return self
        return dataclasses.replace(self, harness=dataclasses.replace(self.harness, **changes))


def _positive_int(**kwargs: Any) -> ma.fields.Integer:
    return ma.fields.Integer(strict=True, validate=ma.validate.Range(min=1), **kwargs)


def _positive_float(**kwargs: Any) -> ma.fields.Float:
    return ma.fields.Float(validate=ma.validate.Range(min=0.0, min_inclusive=False), **kwargs)


def _nonnegative_float(**kwargs: Any) -> ma.fields.Float:
    return ma.fields.Float(validate=ma.validate.Range(min=0.0), **kwargs)


def _pair(inner: ma.fields.Field) -> ma.fields.List:
    return ma.fields.List(inner, validate=ma.validate.Length(equal=2))


def _build(target: type, data: dict[str, Any]) -> Any:
    """Construct a section dataclass; its cross-field checks surface as field errors of the section."""
    try:
        return target(**data)
    except ConfigError as e:
        raise ma.ValidationError(dict(e.fields)) from e


class _Section(ma.Schema):
    """Section schema building ``TARGET`` from the loaded keys."""

    TARGET: type = object

    class Meta:
        unknown = ma.RAISE

    @ma.post_load
    def make_object(self, data: dict[str, Any], **kwargs: Any) -> Any:
        return _build(self.TARGET, data)


class AssignSectionSchema(_Section):
    TARGET = AssignConfig

    k = _positive_int()
    alpha = ma.fields.Float(validate=ma.validate.Range(min=0.0, max=1.0))
    beta = ma.fields.Float(validate=ma.validate.Range(min=0.0, max=1.0, min_inclusive=False))
    s_max = _positive_float()
    gamma_cap = _positive_float()
    scores_are_probabilities = ma.fields.Boolean()
    beta_mode = ma.fields.Enum(BetaMode, by_value=True)
    iou_pos_thresh = ma.fields.Float(validate=ma.validate.Range(min=0.0, max=1.0))
    iou_neg_thresh = ma.fields.Float(validate=ma.validate.Range(min=0.0, max=1.0))
    radius_factor = _positive_float()


class SynthSectionSchema(_Section):
    TARGET = SynthConfig

    seed = ma.fields.Integer(strict=True, validate=ma.validate.Range(min=0))
    image_size = _pair(_positive_int())
    n_gt = _positive_int()
    size_range = _pair(_positive_float())
    size_sampling = ma.fields.Enum(SizeSampling, by_value=True)
    aspect_range = _pair(_positive_float())
    preds_per_gt = _positive_int()
    center_jitter_sigma = _nonnegative_float()
    center_jitter_px = _nonnegative_float()
    scale_jitter_sigma = _nonnegative_float()
    score_noise_sigma = _nonnegative_float()
    n_classes = _positive_int()
    clutter_per_image = ma.fields.Integer(strict=True, validate=ma.validate.Range(min=0))
    max_attempts = _positive_int()

    @ma.post_load
    def make_object(self, data: dict[str, Any], **kwargs: Any) -> Any:
        for key in ("image_size", "size_range", "aspect_range"):
            if key in data:
                data[key] = tuple(data[key])
        return _build(SynthConfig, data)


class MemorySectionSchema(_Section):
    TARGET = MemoryConfig

    num_classes = _positive_int()
    dim = _positive_int()
    momentum = ma.fields.Float(validate=ma.validate.Range(min=0.0, max=1.0))
    seed = ma.fields.Integer(strict=True, validate=ma.validate.Range(min=0))
    scale = _positive_float(allow_none=True)
    eps = _positive_float()
    iterations = _positive_int()
    samples_per_class = _positive_int()
    cluster_spread = _nonnegative_float()


class EnhanceSectionSchema(_Section):
    TARGET = EnhanceConfig

    in_channels = _positive_int()
    roi_size = _positive_int()
    num_heads = _positive_int()
    seed = ma.fields.Integer(strict=True, validate=ma.validate.Range(min=0))
    bias_scale = _nonnegative_float()


class HarnessSectionSchema(_Section):
    TARGET = RunConfig

    threads = ma.fields.Integer(strict=True, validate=ma.validate.Range(min=0))
    scenes = _positive_int()
    assigners = ma.fields.List(
        ma.fields.String(validate=ma.validate.OneOf([a.value for a in AssignerName])),
        validate=ma.validate.Length(min=1),
    )
    format = ma.fields.Enum(ReportFormat, by_value=True)

    @ma.post_load
    def make_object(self, data: dict[str, Any], **kwargs: Any) -> Any:
        if "assigners" in data:
            data["assigners"] = tuple(data["assigners"])
        return _build(RunConfig, data)


class HarnessConfigSchema(ma.Schema):
    """The whole TOML document."""

    class Meta:
        unknown = ma.RAISE

    assign = ma.fields.Nested(AssignSectionSchema, load_default=AssignConfig)
    synth = ma.fields.Nested(SynthSectionSchema, load_default=SynthConfig)
    memory = ma.fields.Nested(MemorySectionSchema, load_default=MemoryConfig)
    enhance = ma.fields.Nested(EnhanceSectionSchema, load_default=EnhanceConfig)
    harness = ma.fields.Nested(HarnessSectionSchema, load_default=RunConfig)

    @ma.post_load
    def make_object(self, data: dict[str, Any], **kwargs: Any) -> HarnessConfig:
        return HarnessConfig(**data)


def config_from_mapping(data: dict[str, Any], source: str = "<mapping>") -> HarnessConfig:
    """Validate an already parsed document.

    Raises:
        ConfigError: Listing every offending key as ``section.key``
    """
    try:
        cfg: HarnessConfig = HarnessConfigSchema().load(data)
    except ma.ValidationError as e:
        fields = flatten_messages(e.messages)
        raise ConfigError(f"Invalid configuration in {source}: {', '.join(sorted(fields))}", fields=fields) from e
    return cfg


def load_config(path: str | os.PathLike[str] | None) -> HarnessConfig:
    """Read and validate a TOML configuration file; ``None`` gives the defaults.

    Raises:
        ConfigError: If the file cannot be read, is not TOML, or fails validation
    """
    if path is None:
        return HarnessConfig()
    source = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {source}: {e}", fields={"file": str(e)}) from e
    except OSError as e:
        raise ConfigError(f"Cannot read configuration {source}: {e}", fields={"file": str(e)}) from e
    cfg = config_from_mapping(data, source)
    logger.info("Loaded configuration from %s", source)
    return cfg
