"""Dense float64 matrix helpers shared by the memory and the enhancement pass.

Matrices are two-dimensional ``numpy`` float64 arrays. Every helper validates
shapes up front and raises ``ShapeMismatchError`` naming the offending pair, so a
bad parameter file surfaces as a clear error instead of a broadcasting surprise.
"""

import numpy as np
import numpy.typing as npt

from ..error.exceptions import ShapeMismatchError

Matrix = npt.NDArray[np.float64]


def as_matrix(x: npt.ArrayLike, name: str = "matrix") -> Matrix:
    """Coerce ``x`` to a 2-D float64 array.

    Raises:
        ShapeMismatchError: If ``x`` is not two-dimensional
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got shape {arr.shape}", operand=name)
    return arr


def matmul(a: npt.ArrayLike, b: npt.ArrayLike, names: tuple[str, str] = ("A", "B")) -> Matrix:
    """Dense product ``a @ b``.

    Raises:
        ShapeMismatchError: If ``a.cols != b.rows``

    Example:
        >>> matmul([[1, 2], [3, 4]], [[0], [1]]).tolist()
        [[2.0], [4.0]]
    """
    left, right = as_matrix(a, names[0]), as_matrix(b, names[1])
    if left.shape[1] != right.shape[0]:
        raise ShapeMismatchError(
            f"cannot multiply {names[0]} {left.shape} by {names[1]} {right.shape}",
            left=names[0],
            right=names[1],
        )
    if left.shape[0] == 0 or right.shape[1] == 0:
        return np.zeros((left.shape[0], right.shape[1]), dtype=np.float64)
    return left @ right


def add_bias(x: Matrix, bias: npt.ArrayLike, names: tuple[str, str] = ("X", "b")) -> Matrix:
    """Add a row vector to every row of ``x``.

    Raises:
        ShapeMismatchError: If the bias length differs from ``x.cols``
    """
    b = np.asarray(bias, dtype=np.float64).reshape(-1)
    if b.shape[0] != x.shape[1]:
        raise ShapeMismatchError(
            f"bias {names[1]} of length {b.shape[0]} does not match {names[0]} with {x.shape[1]} columns",
            left=names[0],
            right=names[1],
        )
    return x + b


def softmax_rows(x: npt.ArrayLike) -> Matrix:
    """Row-wise softmax with the row maximum subtracted first.

    Example:
        >>> softmax_rows([[0.0, np.log(3.0)]]).round(6).tolist()
        [[0.25, 0.75]]
    """
    arr = as_matrix(x, "X")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        return arr.copy()
    shifted = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def relu(x: Matrix) -> Matrix:
    return np.maximum(x, 0.0)


def flatten_rois(features: npt.ArrayLike) -> Matrix:
    """Flatten ``(N, c, h, w)`` region features to ``N x (c*h*w)``.

    Channel-major then row-major spatial order: column ``ci*h*w + y*w + x`` holds
    channel ``ci`` at row ``y``, column ``x``. Two-dimensional input is returned as
    is.

    Raises:
        ShapeMismatchError: If the input is neither 2-D nor 4-D
    """
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim != 4:
        raise ShapeMismatchError(f"region features must be (N, c, h, w) or (N, c*h*w), got {arr.shape}")
    return np.ascontiguousarray(arr).reshape(arr.shape[0], -1, order="C")
