""" mylog v0.2
Simple module to handle logging configuration across the locuskit modules
"""
import logging
import os

_FORMAT = "%(levelname)s: %(name)s -  %(message)s"


def _level_from_env():
    name = os.environ.get("LOCUSKIT_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        return logging.INFO
    return level


def get_logger(name=__name__):
    """(str) -> logging.Logger

    Returns the named logger with a single stderr handler attached.  The level
    comes from LOCUSKIT_LOG_LEVEL (default INFO).
    """
    logger = logging.getLogger(name)
    level = _level_from_env()
    if not any(getattr(h, "_locuskit", False) for h in logger.handlers):
        h = logging.StreamHandler()
        h._locuskit = True
        f = logging.Formatter(_FORMAT)
        h.setFormatter(f)
        logger.addHandler(h)
    for h in logger.handlers:
        h.setLevel(level)
    logger.setLevel(level)
    return logger
