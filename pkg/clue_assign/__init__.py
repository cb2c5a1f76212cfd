"""clue-assign.

Multi-clue label assignment for small object detection, the baselines it is
compared against, a category-aware feature memory with its enhancement pass, a
synthetic scene generator and the harness measuring how evenly each assigner
serves objects of different sizes.

Example:
    >>> from clue_assign import AssignConfig, assign_mcss, generate_scene, get_preset
    >>> scene = generate_scene(get_preset("tiny"), 0)
    >>> result = assign_mcss(scene, AssignConfig())
    >>> len(result.per_gt_positives) == scene.num_gts
    True

Enhancing region features against a memory:
    >>> import numpy as np
    >>> from clue_assign import enhance_pipeline, init_memory, init_params
    >>> memory = init_memory(num_classes=3, dim=8, seed=0)
    >>> params = init_params(in_features=12, dim=8, num_classes=3, seed=0)
    >>> enhance_pipeline(np.ones((2, 12)), memory, params).r_enh.shape
    (2, 8)
"""

from .assign import (
    IGNORED,
    NEGATIVE,
    AssignConfig,
    Assigner,
    AssignerName,
    Assignment,
    BetaMode,
    Scene,
    assign_atss,
    assign_center_distance,
    assign_iou_max,
    assign_mcss,
    available_assigners,
    get_assigner,
)
from .cfem import (
    CategoryMemory,
    EnhanceParams,
    EnhanceResult,
    FeatureBatch,
    enhance_pipeline,
    init_memory,
    init_params,
    load_memory,
    load_params,
    save_memory,
    save_params,
    update_memory,
)
from .config import HarnessConfig, load_config
from .geometry import BBox, Point, area, center, center_distance, iou
from .synth import SizeBucket, SynthConfig, generate_scene, generate_scenes, get_preset, size_bucket

__version__ = "0.1.0"
__author__ = "Dave <david@qualisero.com>"
__email__ = "david@qualisero.com"
__description__ = "Multi-clue label assignment, category-aware feature memory and a sample-balance harness"

__all__ = [
    # Geometry
    "BBox",
    "Point",
    "area",
    "iou",
    "center",
    "center_distance",
    # Assignment
    "Scene",
    "AssignConfig",
    "BetaMode",
    "Assignment",
    "NEGATIVE",
    "IGNORED",
    "assign_mcss",
    "assign_iou_max",
    "assign_center_distance",
    "assign_atss",
    "Assigner",
    "AssignerName",
    "available_assigners",
    "get_assigner",
    # Memory and enhancement
    "CategoryMemory",
    "FeatureBatch",
    "init_memory",
    "update_memory",
    "save_memory",
    "load_memory",
    "EnhanceParams",
    "EnhanceResult",
    "init_params",
    "enhance_pipeline",
    "save_params",
    "load_params",
    # Synthetic scenes
    "SynthConfig",
    "SizeBucket",
    "size_bucket",
    "get_preset",
    "generate_scene",
    "generate_scenes",
    # Configuration
    "HarnessConfig",
    "load_config",
    "__version__",
]
