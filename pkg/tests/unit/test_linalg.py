"""Unit tests for the dense matrix helpers."""

import numpy as np
import pytest

from clue_assign.cfem.linalg import add_bias, as_matrix, flatten_rois, matmul, relu, softmax_rows
from clue_assign.error.exceptions import ShapeMismatchError


class TestMatmul:
    """Tests for matmul and add_bias."""

    def test_reference_product(self) -> None:
        assert matmul([[1, 2], [3, 4]], [[5, 6], [7, 8]]).tolist() == [[19.0, 22.0], [43.0, 50.0]]

    def test_mismatch_names_operands(self) -> None:
        with pytest.raises(ShapeMismatchError, match="W_q") as info:
            matmul(np.ones((2, 3)), np.ones((4, 4)), ("R", "W_q"))
        assert info.value.custom_args == {"left": "R", "right": "W_q"}

    def test_empty_shapes(self) -> None:
        assert matmul(np.zeros((0, 3)), np.ones((3, 2))).shape == (0, 2)
        assert matmul(np.ones((2, 0)), np.ones((0, 3))).tolist() == [[0.0] * 3] * 2

    def test_rejects_vectors(self) -> None:
        with pytest.raises(ShapeMismatchError):
            as_matrix([1.0, 2.0], "b")

    def test_add_bias(self) -> None:
        assert add_bias(np.zeros((2, 2)), [1.0, -1.0]).tolist() == [[1.0, -1.0], [1.0, -1.0]]
        with pytest.raises(ShapeMismatchError):
            add_bias(np.zeros((2, 2)), [1.0, 2.0, 3.0])


class TestSoftmax:
    """Tests for softmax_rows."""

    def test_reference_row(self) -> None:
        assert softmax_rows([[0.0, np.log(3.0)]]).tolist()[0] == pytest.approx([0.25, 0.75])

    def test_shift_invariance(self, rng: np.random.Generator) -> None:
        x = rng.standard_normal((5, 7))
        assert np.allclose(softmax_rows(x), softmax_rows(x + 123.0), rtol=0.0, atol=1e-12)

    def test_large_logits_do_not_overflow(self) -> None:
        out = softmax_rows([[1000.0, 0.0], [-1000.0, -1000.0]])
        assert np.isfinite(out).all()
        assert out[0].tolist() == [1.0, 0.0]
        assert out[1].tolist() == [0.5, 0.5]

    def test_rows_sum_to_one(self, rng: np.random.Generator) -> None:
        out = softmax_rows(rng.standard_normal((20, 9)) * 10)
        assert np.allclose(out.sum(axis=1), 1.0, rtol=0.0, atol=1e-12)
        assert (out >= 0.0).all()

    def test_empty(self) -> None:
        assert softmax_rows(np.zeros((0, 4))).shape == (0, 4)


def test_relu() -> None:
    assert relu(np.array([[-1.0, 0.0, 2.5]])).tolist() == [[0.0, 0.0, 2.5]]


class TestFlattenRois:
    """Tests for flatten_rois."""

    def test_channel_major_order(self) -> None:
        features = np.arange(2 * 3 * 2 * 2, dtype=float).reshape(2, 3, 2, 2)
        flat = flatten_rois(features)
        assert flat.shape == (2, 12)
        assert flat[1].tolist() == list(range(12, 24))
        # channel 1, row 0, column 1
        assert flat[0, 1 * 4 + 0 * 2 + 1] == features[0, 1, 0, 1]

    def test_two_dimensional_passthrough(self) -> None:
        x = np.ones((3, 5))
        assert flatten_rois(x).shape == (3, 5)

    def test_other_ranks(self) -> None:
        with pytest.raises(ShapeMismatchError):
            flatten_rois(np.ones((2, 3, 4)))
