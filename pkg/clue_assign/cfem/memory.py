"""Category-aware memory bank.

The memory holds one prototype row per category plus a final background row.
Ground truth region features update it in three steps: each feature is weighted
by how *dissimilar* it is to the current prototype (``1 - cosine``), the weighted
features are averaged, and the average is blended into the prototype with a small
momentum. Rows of categories absent from a batch are left untouched.

A memory is immutable; every update returns a new ``CategoryMemory``.

Example:
    >>> mem = init_memory(num_classes=2, dim=4, seed=0)
    >>> batch = FeatureBatch(np.ones((3, 4)), [0, 0, 2])
    >>> update_memory(mem, batch).matrix.shape
    (3, 4)
"""

import logging
import math
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..error.exceptions import (
    ConfigError,
    EmptyInputError,
    LengthMismatchError,
    MalformedDocumentError,
    ProbabilityRangeError,
    ShapeMismatchError,
    ZeroNormError,
)
from ..ingest.matrices import load_matrices, save_matrices
from .linalg import Matrix, as_matrix, matmul

logger = logging.getLogger(__name__)

DEFAULT_DIM = 1024
DEFAULT_MOMENTUM = 0.01
AGGREGATION_EPS = 1e-8
PROBABILITY_ROW_TOLERANCE = 1e-6
NO_SEED = -1


@dataclass(frozen=True, eq=False)
class CategoryMemory:
    """Prototype matrix of shape ``(C + 1, D)``; row ``C`` is the background.

    Attributes:
        matrix: Read-only prototype rows
        momentum: Blend factor of new aggregates, in ``[0, 1]``
        seed: Seed the matrix was initialised from, if known
    """

    matrix: Matrix
    momentum: float = DEFAULT_MOMENTUM
    seed: int | None = None

    def __post_init__(self) -> None:
        matrix = as_matrix(self.matrix, "M").copy()
        if matrix.shape[0] < 2 or matrix.shape[1] < 1:
            raise ShapeMismatchError(f"memory needs at least 2 rows and 1 column, got {matrix.shape}")
        if not np.isfinite(matrix).all():
            raise ConfigError("Memory contains non-finite entries", fields={"matrix": "must be finite"})
        if not 0.0 <= self.momentum <= 1.0:
            raise ConfigError("Invalid momentum", fields={"momentum": "must lie in [0, 1]"})
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def num_classes(self) -> int:
        """Foreground category count ``C``."""
        return int(self.matrix.shape[0]) - 1

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def background_index(self) -> int:
        return self.num_classes

    def with_matrix(self, matrix: Matrix) -> "CategoryMemory":
        return CategoryMemory(matrix, self.momentum, self.seed)


@dataclass(frozen=True, eq=False)
class FeatureBatch:
    """Region features with their category labels (``C`` meaning background).

    Raises:
        LengthMismatchError: If the label count differs from the row count
        ShapeMismatchError: If ``features`` is not 2-D
    """

    features: Matrix
    labels: Sequence[int]

    def __post_init__(self) -> None:
        features = as_matrix(self.features, "features")
        labels = tuple(int(label) for label in self.labels)
        if len(labels) != features.shape[0]:
            raise LengthMismatchError(f"{features.shape[0]} feature rows but {len(labels)} labels")
        if not np.isfinite(features).all():
            raise ConfigError("Feature batch contains non-finite entries", fields={"features": "must be finite"})
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def empty(cls, dim: int) -> "FeatureBatch":
        return cls(np.zeros((0, dim)), [])


def init_memory(
    num_classes: int,
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    scale: float | None = None,
    momentum: float = DEFAULT_MOMENTUM,
) -> CategoryMemory:
    """Draw a ``(num_classes + 1) x dim`` memory from ``normal(0, scale**2)``.

    Samples come from a PCG64 generator seeded with ``seed``, so the matrix is
    identical across runs and platforms. ``scale`` defaults to ``1 / sqrt(dim)``.

    Raises:
        ConfigError: If a size is below 1 or ``scale`` is not positive
    """
    if scale is None:
        scale = 1.0 / math.sqrt(dim) if dim > 0 else 0.0
    errors: dict[str, str] = {}
    if num_classes < 1:
        errors["num_classes"] = "must be at least 1"
    if dim < 1:
        errors["dim"] = "must be at least 1"
    if not scale > 0.0:
        errors["scale"] = "must be positive"
    if errors:
        raise ConfigError("Invalid memory initialisation", fields=errors)

    rng = np.random.Generator(np.random.PCG64(seed))
    matrix = rng.standard_normal((num_classes + 1, dim)) * scale
    if not np.linalg.norm(matrix, axis=1).all():
        raise ZeroNormError("initialised memory has a zero row", seed=seed)
    return CategoryMemory(matrix, momentum, seed)


def cosine_weights(g: npt.ArrayLike, m_c: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Cosine similarity of every row of ``g`` to the prototype ``m_c``.

    Raises:
        ZeroNormError: If a row or the prototype is the zero vector
        ShapeMismatchError: If the widths differ

    Example:
        >>> cosine_weights([[1.0, 0.0]], [1.0, 1.0]).round(4).tolist()
        [0.7071]
    """
    rows = as_matrix(g, "G")
    proto = np.asarray(m_c, dtype=np.float64).reshape(-1)
    if rows.shape[1] != proto.shape[0]:
        raise ShapeMismatchError(
            f"features of width {rows.shape[1]} against a memory row of width {proto.shape[0]}",
            left="G",
            right="m_c",
        )
    proto_norm = float(np.linalg.norm(proto))
    if proto_norm == 0.0:
        raise ZeroNormError("memory row has zero norm")
    row_norms = np.linalg.norm(rows, axis=1)
    if rows.shape[0] and not row_norms.all():
        raise ZeroNormError(f"feature row {int(np.flatnonzero(row_norms == 0.0)[0])} has zero norm")
    return np.clip((rows @ proto) / (row_norms * proto_norm), -1.0, 1.0)


def aggregation_weights(w_cos: npt.ArrayLike, eps: float = AGGREGATION_EPS) -> npt.NDArray[np.float64]:
    """Normalised ``1 - cosine`` weights; uniform when their sum is below ``eps``.

    Raises:
        EmptyInputError: If ``w_cos`` is empty
    """
    w = np.asarray(w_cos, dtype=np.float64).reshape(-1)
    if w.size == 0:
        raise EmptyInputError("aggregation over an empty feature set")
    dissimilarity = 1.0 - w
    total = float(dissimilarity.sum())
    if total < eps:
        return np.full(w.shape[0], 1.0 / w.shape[0])
    return dissimilarity / total


def aggregate_category(
    g: npt.ArrayLike, w_cos: npt.ArrayLike, eps: float = AGGREGATION_EPS
) -> npt.NDArray[np.float64]:
    """Weighted average of feature rows, favouring rows unlike the prototype.

    Raises:
        EmptyInputError: If there are no rows
        LengthMismatchError: If the weight count differs from the row count

    Example:
        >>> aggregate_category([[3.0, 0.0], [0.0, 3.0]], [0.2, 0.6]).round(6).tolist()
        [2.0, 1.0]
    """
    rows = as_matrix(g, "G")
    w = np.asarray(w_cos, dtype=np.float64).reshape(-1)
    if rows.shape[0] != w.shape[0]:
        raise LengthMismatchError(f"{rows.shape[0]} feature rows but {w.shape[0]} cosine weights")
    return aggregation_weights(w, eps) @ rows


def ema_update(mem: CategoryMemory, agg: Mapping[int, npt.ArrayLike]) -> CategoryMemory:
    """Blend aggregates into their rows: ``M_j <- (1 - m) * M_j + m * T_j``.

    Rows without an entry in ``agg`` are copied unchanged, and so is a row the blend would
    turn into the zero vector, which cosine weighting cannot use.

    Raises:
        ShapeMismatchError: If a label or aggregate width is out of range
    """
    matrix = mem.matrix.copy()
    m = mem.momentum
    for label, row in agg.items():
        if not 0 <= label < matrix.shape[0]:
            raise ShapeMismatchError(f"aggregate for row {label} of a memory with {matrix.shape[0]} rows")
        t = np.asarray(row, dtype=np.float64).reshape(-1)
        if t.shape[0] != matrix.shape[1]:
            raise ShapeMismatchError(
                f"aggregate of width {t.shape[0]} for a memory of width {matrix.shape[1]}", left="T", right="M"
            )
        blended = (1.0 - m) * matrix[label] + m * t
        if float(np.linalg.norm(blended)) == 0.0:
            logger.warning("update would zero memory row %d; keeping the previous row", label)
            continue
        matrix[label] = blended
    return mem.with_matrix(matrix)


def select_background_updates(
    neg_features: npt.ArrayLike,
    neg_max_iou: npt.ArrayLike,
    background_label: int,
    count: int = 2,
) -> FeatureBatch:
    """The negatives overlapping the ground truth least, labelled as background.

    Rows are ranked by their maximum IoU with any ground truth; ties keep the lower
    index. Fewer than ``count`` negatives yields all of them.

    Raises:
        LengthMismatchError: If the IoU count differs from the row count

    Example:
        >>> batch = select_background_updates(np.eye(3), [0.3, 0.0, 0.1], background_label=9)
        >>> batch.features.argmax(axis=1).tolist(), batch.labels
        ([1, 2], (9, 9))
    """
    features = as_matrix(neg_features, "negatives")
    ious = np.asarray(neg_max_iou, dtype=np.float64).reshape(-1)
    if ious.shape[0] != features.shape[0]:
        raise LengthMismatchError(f"{features.shape[0]} negative rows but {ious.shape[0]} IoU values")
    chosen = np.argsort(ious, kind="stable")[:count]
    return FeatureBatch(features[chosen], [background_label] * int(chosen.shape[0]))


def update_memory(mem: CategoryMemory, batch: FeatureBatch, eps: float = AGGREGATION_EPS) -> CategoryMemory:
    """One memory step: cosine weights, aggregation and EMA for every observed label.

    The background row goes through the same path as the foreground rows.

    Raises:
        ShapeMismatchError: If a label is out of range or the widths differ
    """
    if len(batch) == 0:
        return mem
    if batch.features.shape[1] != mem.dim:
        raise ShapeMismatchError(
            f"features of width {batch.features.shape[1]} for a memory of width {mem.dim}", left="G", right="M"
        )
    labels = np.asarray(batch.labels, dtype=np.int64)
    if labels.min() < 0 or labels.max() > mem.background_index:
        raise ShapeMismatchError(f"labels must lie in [0, {mem.background_index}]")

    aggregates: dict[int, npt.NDArray[np.float64]] = {}
    for label in np.unique(labels).tolist():
        rows = batch.features[labels == label]
        w = cosine_weights(rows, mem.matrix[label])
        aggregates[label] = aggregate_category(rows, w, eps)
    logger.debug("memory update over labels %s", sorted(aggregates))
    return ema_update(mem, aggregates)


def generate_category_feature(p: npt.ArrayLike, mem: CategoryMemory) -> Matrix:
    """Category-aware features ``P @ M``.

    Raises:
        ShapeMismatchError: If ``P`` does not have ``C + 1`` columns
        ProbabilityRangeError: If a row of ``P`` is negative or does not sum to 1
            within 1e-6
    """
    probs = as_matrix(p, "P")
    if probs.shape[1] != mem.matrix.shape[0]:
        raise ShapeMismatchError(
            f"P has {probs.shape[1]} columns but the memory has {mem.matrix.shape[0]} rows", left="P", right="M"
        )
    if probs.shape[0]:
        if probs.min() < 0.0:
            raise ProbabilityRangeError("category probabilities must be nonnegative")
        sums = probs.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROBABILITY_ROW_TOLERANCE)
        if bad.size:
            row = int(bad[0])
            raise ProbabilityRangeError(f"row {row} of P sums to {float(sums[row])}, not 1", row=row)
    return matmul(probs, mem.matrix, ("P", "M"))


def save_memory(mem: CategoryMemory, path: str | os.PathLike[str]) -> None:
    """Write a memory snapshot (see ``docs/formats.rst``)."""
    save_matrices(
        path,
        {
            "matrix": mem.matrix,
            "num_classes": np.int64(mem.num_classes),
            "dim": np.int64(mem.dim),
            "momentum": np.float64(mem.momentum),
            "seed": np.int64(NO_SEED if mem.seed is None else mem.seed),
        },
    )


def load_memory(path: str | os.PathLike[str]) -> CategoryMemory:
    """Read a memory snapshot written by ``save_memory``.

    Raises:
        MalformedDocumentError: If entries are missing or inconsistent
    """
    arrays = load_matrices(path, required=("matrix", "num_classes", "dim", "momentum", "seed"))
    matrix = arrays["matrix"]
    if matrix.shape != (int(arrays["num_classes"]) + 1, int(arrays["dim"])):
        raise MalformedDocumentError(
            {"matrix": f"shape {matrix.shape} disagrees with num_classes/dim"},
            location="file",
            message=f"Inconsistent memory snapshot {os.fspath(path)}",
        )
    seed = int(arrays["seed"])
    return CategoryMemory(matrix, float(arrays["momentum"]), None if seed == NO_SEED else seed)
