"""Configuration of the web app and the command line defaults."""

import os

from stopping import consts


class Settings:
    """Base configuration object."""

    DEBUG = False
    TESTING = False
    VERSION = "1.0"

    # numeric values are parsed by the controller, bad ones fall back to the defaults
    STOPPING_SEED = os.environ.get("STOPPING_SEED", consts.DEFAULT_SEED)
    STOPPING_EPISODES = os.environ.get("STOPPING_EPISODES", consts.DEFAULT_EPISODES)
    STOPPING_GRID_POINTS = os.environ.get("STOPPING_GRID_POINTS", consts.DEFAULT_GRID_POINTS)
    STOPPING_THREADS = os.environ.get("STOPPING_THREADS", consts.DEFAULT_THREADS)
    STOPPING_BLOCK_SIZE = os.environ.get("STOPPING_BLOCK_SIZE", consts.DEFAULT_BLOCK_SIZE)
