"""Test configuration and fixtures for clue-assign tests."""

import logging
from collections.abc import Generator
from typing import TYPE_CHECKING

import numpy as np
import pytest
from flask import Flask

from clue_assign.app import create_app
from clue_assign.assign.scene import Scene
from clue_assign.config import HarnessConfig

if TYPE_CHECKING:
    from flask.testing import FlaskClient, FlaskCliRunner


@pytest.fixture(scope="function")
def app() -> Flask:
    """Create and configure a test Flask application.

    Returns:
        Configured Flask application instance for testing
    """
    return create_app(HarnessConfig(), TESTING=True)


@pytest.fixture
def client(app: Flask) -> "FlaskClient":
    """Create a test client.

    Args:
        app: Flask application fixture

    Returns:
        Test client for making requests
    """
    return app.test_client()


@pytest.fixture
def runner(app: Flask) -> "FlaskCliRunner":
    """Create a CLI runner bound to the test application."""
    return app.test_cli_runner()


def random_scene(
    rng: np.random.Generator,
    n_gt: int = 8,
    n_pred: int = 120,
    num_classes: int = 3,
    image: float = 300.0,
) -> Scene:
    """Scene with continuous coordinates, so distance and confidence ties do not occur.

    Ground truth sizes are log-uniform in ``[2, 200]`` px; half of the predictions
    are jittered copies of ground truths, the rest are scattered over the image.
    """
    sizes = np.exp(rng.uniform(np.log(2.0), np.log(200.0), n_gt))
    aspects = np.exp(rng.uniform(np.log(0.5), np.log(2.0), n_gt))
    w, h = sizes * np.sqrt(aspects), sizes / np.sqrt(aspects)
    cx, cy = rng.uniform(0.0, image, n_gt), rng.uniform(0.0, image, n_gt)
    gt = np.stack((cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2), axis=1)

    n_near = n_pred // 2
    parent = rng.integers(0, n_gt, n_near)
    pw = w[parent] * np.exp(0.2 * rng.standard_normal(n_near))
    ph = h[parent] * np.exp(0.2 * rng.standard_normal(n_near))
    pcx = cx[parent] + 0.3 * w[parent] * rng.standard_normal(n_near)
    pcy = cy[parent] + 0.3 * h[parent] * rng.standard_normal(n_near)
    near = np.stack((pcx - pw / 2, pcy - ph / 2, pcx + pw / 2, pcy + ph / 2), axis=1)

    n_far = n_pred - n_near
    fs = np.exp(rng.uniform(np.log(2.0), np.log(200.0), n_far))
    fx, fy = rng.uniform(0.0, image, n_far), rng.uniform(0.0, image, n_far)
    far = np.stack((fx - fs / 2, fy - fs / 2, fx + fs / 2, fy + fs / 2), axis=1)

    return Scene.from_arrays(
        gt,
        rng.integers(0, num_classes, n_gt).tolist(),
        np.concatenate((near, far)),
        rng.standard_normal((n_pred, num_classes)) * 2.0,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def scene(rng: np.random.Generator) -> Scene:
    """One random scene with 8 ground truths and 120 predictions."""
    return random_scene(rng)


@pytest.fixture(autouse=True)
def _restore_logging() -> Generator[None, None, None]:
    """Undo the root handler and levels a CLI invocation installs."""
    root = logging.getLogger()
    error_logger = logging.getLogger("clue_assign.error")
    before, root_level, error_level = list(root.handlers), root.level, error_logger.level
    yield
    for handler in list(root.handlers):
        if handler not in before and type(handler) is logging.StreamHandler:
            root.removeHandler(handler)
    root.setLevel(root_level)
    error_logger.setLevel(error_level)
