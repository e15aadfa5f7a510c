"""
Main Flask application entry point for the anti-unification service.

This module provides the application factory pattern for creating Flask app instances.
Routes are organized in separate blueprint modules in the routes package.
"""

import logging
import os
from typing import Mapping, Optional

from flask import Flask

from routes import register_blueprints

DEFAULTS = {
    "MAX_STATES": 100_000,
    "MAX_RESULTS": 1_000,
    "LOG_LEVEL": "WARNING",
}


def _env_int(name: str) -> Optional[int]:
    value = os.environ.get(name)
    return int(value) if value else None


def create_app(config: Optional[Mapping] = None):
    """
    Application factory function to create and configure Flask app.

    Args:
        config: Settings merged over the defaults and the VNAU_MAX_STATES /
            VNAU_MAX_RESULTS environment variables

    Returns:
        Flask: Configured Flask application instance
    """
    app = Flask(__name__)
    app.config.update(DEFAULTS)

    for key, env in (("MAX_STATES", "VNAU_MAX_STATES"), ("MAX_RESULTS", "VNAU_MAX_RESULTS")):
        value = _env_int(env)
        if value is not None:
            app.config[key] = value

    if config:
        app.config.update(config)

    logging.basicConfig(level=app.config["LOG_LEVEL"],
                        format="%(levelname)s %(name)s: %(message)s")
    app.logger.setLevel(app.config["LOG_LEVEL"])

    # Register all route blueprints
    register_blueprints(app)

    return app


if __name__ == '__main__':
    app = create_app()
    app.run(debug=True, host='0.0.0.0', port=5000)
