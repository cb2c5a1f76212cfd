"""Category-aware feature enhancement forward pass.

Candidate region features are embedded, classified, turned into category-aware
features through the memory, attended against those features and fused back::

    R     = ReLU(R_hat @ W_embed + b_embed)
    P     = softmax(R @ W_cls + b_cls)
    F_c   = P @ M
    A     = softmax((R @ W_q) (F_c @ W_k)^T * scale) (F_c @ W_v)
    R_enh = [R | A] @ W_fuse + b_fuse

Attention runs over the candidate axis: every box attends to the category-aware
features of all boxes in the batch. With ``num_heads > 1`` the projected width is
split into equal column blocks, one per head.

Parameters are plain matrices supplied by the caller, either loaded from a file or
drawn by ``init_params``; nothing here trains them.
"""

import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..error.exceptions import ConfigError, ShapeMismatchError
from ..ingest.matrices import load_matrices, require_matrix, save_matrices
from .linalg import Matrix, add_bias, as_matrix, flatten_rois, matmul, relu, softmax_rows
from .memory import CategoryMemory, generate_category_feature

logger = logging.getLogger(__name__)

MATRIX_FIELDS = ("w_embed", "b_embed", "w_cls", "b_cls", "w_q", "w_k", "w_v", "w_fuse", "b_fuse")


@dataclass(frozen=True, eq=False)
class EnhanceParams:
    """Weights of the enhancement pass.

    Attributes:
        w_embed: ``F x D`` embedding of flattened region features
        b_embed: ``D`` embedding bias
        w_cls: ``D x (C + 1)`` linear classifier
        b_cls: ``C + 1`` classifier bias
        w_q: ``D x D`` query projection
        w_k: ``D x D`` key projection
        w_v: ``D x D`` value projection
        w_fuse: ``2D x D`` fusion of ``[R | A]``
        b_fuse: ``D`` fusion bias
        attn_scale: Score scale; ``1 / sqrt(D / num_heads)`` when omitted
        num_heads: Attention heads; must divide ``D``

    Raises:
        ShapeMismatchError: If any pair of shapes is incompatible
        ConfigError: If ``num_heads`` does not divide ``D`` or the scale is not
            positive
    """

    w_embed: Matrix
    b_embed: Matrix
    w_cls: Matrix
    b_cls: Matrix
    w_q: Matrix
    w_k: Matrix
    w_v: Matrix
    w_fuse: Matrix
    b_fuse: Matrix
    attn_scale: float | None = None
    num_heads: int = 1

    def __post_init__(self) -> None:
        for name in MATRIX_FIELDS:
            arr = np.array(getattr(self, name), dtype=np.float64)
            if name.startswith("b_"):
                arr = arr.reshape(-1)
            elif arr.ndim != 2:
                raise ShapeMismatchError(f"{name} must be 2-D, got shape {arr.shape}", operand=name)
            if not np.isfinite(arr).all():
                raise ConfigError("Non-finite parameter", fields={name: "must be finite"})
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

        dim = self.w_embed.shape[1]
        expected = {
            "b_embed": (dim,),
            "w_cls": (dim, self.w_cls.shape[1]),
            "b_cls": (self.w_cls.shape[1],),
            "w_q": (dim, dim),
            "w_k": (dim, dim),
            "w_v": (dim, dim),
            "w_fuse": (2 * dim, dim),
            "b_fuse": (dim,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeMismatchError(
                    f"{name} has shape {actual}, expected {shape} to match w_embed {self.w_embed.shape}",
                    left="w_embed",
                    right=name,
                )
        if self.num_heads < 1 or dim % self.num_heads:
            raise ConfigError("Invalid head count", fields={"num_heads": f"must divide the feature width {dim}"})
        if self.attn_scale is None:
            object.__setattr__(self, "attn_scale", 1.0 / math.sqrt(dim // self.num_heads))
        elif not self.attn_scale > 0.0:
            raise ConfigError("Invalid attention scale", fields={"attn_scale": "must be positive"})

    @property
    def in_features(self) -> int:
        return int(self.w_embed.shape[0])

    @property
    def dim(self) -> int:
        return int(self.w_embed.shape[1])

    @property
    def num_outputs(self) -> int:
        """Classifier width ``C + 1``."""
        return int(self.w_cls.shape[1])

    @property
    def scale(self) -> float:
        assert self.attn_scale is not None
        return self.attn_scale


@dataclass(frozen=True, eq=False)
class EnhanceResult:
    """All intermediates of one enhancement pass."""

    r: Matrix
    probs: Matrix
    f_c: Matrix
    r_enh: Matrix

    def as_dict(self) -> dict[str, Matrix]:
        return {"R": self.r, "P": self.probs, "F_c": self.f_c, "R_enh": self.r_enh}


def init_params(
    in_features: int,
    dim: int,
    num_classes: int,
    seed: int = 0,
    num_heads: int = 1,
    bias_scale: float = 0.1,
) -> EnhanceParams:
    """Draw parameters from a PCG64 generator seeded with ``seed``.

    Weights are ``normal(0, 1 / fan_in)``; biases are ``normal(0, bias_scale**2)``.
    Matrices are drawn in a fixed order, so a seed always yields the same
    parameters.

    Raises:
        ConfigError: If a size is below 1
    """
    errors = {
        name: "must be at least 1"
        for name, value in (("in_features", in_features), ("dim", dim), ("num_classes", num_classes))
        if value < 1
    }
    if errors:
        raise ConfigError("Invalid parameter sizes", fields=errors)

    rng = np.random.Generator(np.random.PCG64(seed))
    shapes = {
        "w_embed": (in_features, dim),
        "b_embed": (dim,),
        "w_cls": (dim, num_classes + 1),
        "b_cls": (num_classes + 1,),
        "w_q": (dim, dim),
        "w_k": (dim, dim),
        "w_v": (dim, dim),
        "w_fuse": (2 * dim, dim),
        "b_fuse": (dim,),
    }
    drawn: dict[str, Matrix] = {}
    for name in MATRIX_FIELDS:
        shape = shapes[name]
        std = bias_scale if name.startswith("b_") else 1.0 / math.sqrt(shape[0])
        drawn[name] = rng.standard_normal(shape) * std
    return EnhanceParams(**drawn, num_heads=num_heads)


def embed(r_hat: npt.ArrayLike, p: EnhanceParams) -> Matrix:
    """Embed flattened region features: ``ReLU(R_hat @ W_embed + b_embed)``.

    Raises:
        ShapeMismatchError: If the feature width differs from ``W_embed`` rows
    """
    flat = flatten_rois(r_hat)
    return relu(add_bias(matmul(flat, p.w_embed, ("R_hat", "W_embed")), p.b_embed, ("R_hat W_embed", "b_embed")))


def classify(r: npt.ArrayLike, p: EnhanceParams) -> Matrix:
    """Category distribution per box, ``softmax(R @ W_cls + b_cls)``, with ``C + 1`` columns."""
    return softmax_rows(add_bias(matmul(r, p.w_cls, ("R", "W_cls")), p.b_cls, ("R W_cls", "b_cls")))


def _head_slices(p: EnhanceParams) -> list[slice]:
    width = p.dim // p.num_heads
    return [slice(h * width, (h + 1) * width) for h in range(p.num_heads)]


def _check_pair(r: Matrix, f_c: Matrix) -> None:
    if r.shape != f_c.shape:
        raise ShapeMismatchError(f"R {r.shape} and F_c {f_c.shape} must have the same shape", left="R", right="F_c")


def attention_weights(r: npt.ArrayLike, f_c: npt.ArrayLike, p: EnhanceParams) -> list[Matrix]:
    """Per-head ``N x N`` attention matrices; every row sums to 1."""
    r, f_c = as_matrix(r, "R"), as_matrix(f_c, "F_c")
    _check_pair(r, f_c)
    q = matmul(r, p.w_q, ("R", "W_q"))
    k = matmul(f_c, p.w_k, ("F_c", "W_k"))
    return [softmax_rows(matmul(q[:, cols], k[:, cols].T, ("Q", "K^T")) * p.scale) for cols in _head_slices(p)]


def cross_attention(r: npt.ArrayLike, f_c: npt.ArrayLike, p: EnhanceParams) -> Matrix:
    """Boxes (queries) attending to category-aware features (keys and values).

    An empty batch gives an empty ``0 x D`` result.

    Raises:
        ShapeMismatchError: If ``R`` and ``F_c`` differ in shape or do not match the
            projections
    """
    r, f_c = as_matrix(r, "R"), as_matrix(f_c, "F_c")
    _check_pair(r, f_c)
    if r.shape[0] == 0:
        return np.zeros((0, p.dim))
    v = matmul(f_c, p.w_v, ("F_c", "W_v"))
    heads = attention_weights(r, f_c, p)
    out = np.empty((r.shape[0], p.dim))
    for weights, cols in zip(heads, _head_slices(p), strict=True):
        out[:, cols] = matmul(weights, v[:, cols], ("A", "V"))
    return out


def fuse(r: npt.ArrayLike, attended: npt.ArrayLike, p: EnhanceParams) -> Matrix:
    """Linear fusion of the concatenation ``[R | attended]``; output width equals ``R``'s."""
    r, attended = as_matrix(r, "R"), as_matrix(attended, "attended")
    if r.shape != attended.shape:
        raise ShapeMismatchError(
            f"R {r.shape} and attended {attended.shape} must have the same shape", left="R", right="attended"
        )
    stacked = matmul(np.hstack((r, attended)), p.w_fuse, ("[R|A]", "W_fuse"))
    return add_bias(stacked, p.b_fuse, ("[R|A] W_fuse", "b_fuse"))


def enhance_pipeline(r_hat: npt.ArrayLike, memory: CategoryMemory, p: EnhanceParams) -> EnhanceResult:
    """Run embed, classify, category feature generation, attention and fusion.

    Raises:
        ShapeMismatchError: If the parameters, the memory and the features disagree
    """
    if memory.dim != p.dim or memory.matrix.shape[0] != p.num_outputs:
        raise ShapeMismatchError(
            f"memory {memory.matrix.shape} does not match parameters (D={p.dim}, C+1={p.num_outputs})",
            left="memory",
            right="params",
        )
    r = embed(r_hat, p)
    probs = classify(r, p)
    f_c = generate_category_feature(probs, memory)
    attended = cross_attention(r, f_c, p)
    r_enh = fuse(r, attended, p)
    logger.debug("enhanced %d boxes of width %d", r_enh.shape[0], r_enh.shape[1])
    return EnhanceResult(r, probs, f_c, r_enh)


def save_params(p: EnhanceParams, path: str | os.PathLike[str]) -> None:
    """Write parameters to a matrix container (see ``docs/formats.rst``)."""
    arrays: dict[str, npt.ArrayLike] = {name: getattr(p, name) for name in MATRIX_FIELDS}
    arrays["attn_scale"] = np.float64(p.scale)
    arrays["num_heads"] = np.int64(p.num_heads)
    save_matrices(path, arrays)


def load_params(path: str | os.PathLike[str]) -> EnhanceParams:
    """Read parameters written by ``save_params``.

    Raises:
        MalformedDocumentError: If a member is missing
        ShapeMismatchError: If the shapes are inconsistent
    """
    arrays = load_matrices(path, required=(*MATRIX_FIELDS, "attn_scale", "num_heads"))
    source = f"parameter file {os.fspath(path)}"
    matrices = {
        name: arrays[name] if name.startswith("b_") else require_matrix(arrays, name, source) for name in MATRIX_FIELDS
    }
    return EnhanceParams(**matrices, attn_scale=float(arrays["attn_scale"]), num_heads=int(arrays["num_heads"]))

