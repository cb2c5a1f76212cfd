"""Label assignment: multi-clue sample selection and its baselines."""

from .baselines import assign_atss, assign_center_distance, assign_iou_max
from .mcss import (
    assign_mcss,
    category_confidence,
    dynamic_threshold,
    multi_clue_confidence,
    population_mean_std,
    resolve_duplicates,
    sigmoid,
    standard_ratio,
    topk_by_center,
)
from .registry import ASSIGNERS, Assigner, AssignerName, available_assigners, get_assigner
from .scene import (
    IGNORED,
    NEGATIVE,
    AssignConfig,
    Assignment,
    BetaMode,
    Ignored,
    Negative,
    Positive,
    Scene,
    Verdict,
)

__all__ = [
    # Types
    "Scene",
    "AssignConfig",
    "BetaMode",
    "Assignment",
    "Positive",
    "Negative",
    "Ignored",
    "Verdict",
    "NEGATIVE",
    "IGNORED",
    # Multi-clue selection
    "topk_by_center",
    "sigmoid",
    "category_confidence",
    "multi_clue_confidence",
    "standard_ratio",
    "population_mean_std",
    "dynamic_threshold",
    "resolve_duplicates",
    "assign_mcss",
    # Baselines
    "assign_iou_max",
    "assign_center_distance",
    "assign_atss",
    # Registry
    "Assigner",
    "AssignerName",
    "ASSIGNERS",
    "available_assigners",
    "get_assigner",
]
