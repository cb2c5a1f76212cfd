"""Category-aware memory and the feature enhancement pass built on it."""

from .enhance import (
    EnhanceParams,
    EnhanceResult,
    attention_weights,
    classify,
    cross_attention,
    embed,
    enhance_pipeline,
    fuse,
    init_params,
    load_params,
    save_params,
)
from .linalg import Matrix, as_matrix, flatten_rois, matmul, relu, softmax_rows
from .memory import (
    CategoryMemory,
    FeatureBatch,
    aggregate_category,
    aggregation_weights,
    cosine_weights,
    ema_update,
    generate_category_feature,
    init_memory,
    load_memory,
    save_memory,
    select_background_updates,
    update_memory,
)

__all__ = [
    # Dense kernel
    "Matrix",
    "as_matrix",
    "matmul",
    "softmax_rows",
    "relu",
    "flatten_rois",
    # Memory
    "CategoryMemory",
    "FeatureBatch",
    "init_memory",
    "cosine_weights",
    "aggregation_weights",
    "aggregate_category",
    "ema_update",
    "select_background_updates",
    "update_memory",
    "generate_category_feature",
    "save_memory",
    "load_memory",
    # Enhancement
    "EnhanceParams",
    "EnhanceResult",
    "init_params",
    "embed",
    "classify",
    "attention_weights",
    "cross_attention",
    "fuse",
    "enhance_pipeline",
    "save_params",
    "load_params",
]
