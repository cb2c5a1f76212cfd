"""Flask application factory for the HTTP surface and the ``clue-assign`` command group."""

import logging
import os
from typing import Any

from flask import Flask

from .api import Api, blp
from .config import CONFIG_KEY, HarnessConfig, load_config
from .error import RequestHandlers

logger = logging.getLogger(__name__)

CONFIG_ENV = "CLUE_ASSIGN_CONFIG"


def create_app(config: HarnessConfig | None = None, **flask_config: Any) -> Flask:
    """Build the application.

    Args:
        config: Resolved run configuration; when omitted it is read from the TOML
            file named by ``CLUE_ASSIGN_CONFIG``, or defaults if that is unset
        **flask_config: Extra Flask config values (``TESTING`` and the like)

    Returns:
        Flask app with the assignment API registered and the configuration stored
        under ``app.config["CLUE_ASSIGN"]``

    Example:
        >>> app = create_app(TESTING=True)
        >>> app.config["CLUE_ASSIGN"].assign.k
        9
    """
    app = Flask(__name__)
    app.config.update(
        API_TITLE="clue-assign",
        API_VERSION="v1",
        OPENAPI_VERSION="3.0.2",
    )
    app.config.update(flask_config)
    if config is None:
        config = load_config(os.environ.get(CONFIG_ENV) or None)
    app.config[CONFIG_KEY] = config

    RequestHandlers(app)
    api = Api(app)
    api.register_blueprint(blp)
    logger.debug("Application created")
    return app
