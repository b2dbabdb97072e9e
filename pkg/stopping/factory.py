"""Application factory for the thresholds web app."""
from flask import Flask

from stopping.config import Settings
from stopping import routes


def create_web_app() -> Flask:
    """Initialize and configure the web application."""
    settings = Settings()
    app = Flask("stopping")
    app.config.from_object(settings)
    app.url_map.strict_slashes = False
    app.register_blueprint(routes.blueprint)
    return app
