import logging
import sys

from fredholm import settings

logger = logging.getLogger("fredholm")
logger.setLevel(logging.DEBUG if settings.debug else logging.INFO)

# Print to standard error if in debug mode, stdout carries JSON reports
if settings.debug:
    std_err_stream_handler = logging.StreamHandler(sys.stderr)
    logger.addHandler(std_err_stream_handler)

# Python Logging Levels:
# https://docs.python.org/3/library/logging.html#levels


def debug(*argv):
    """Debug level log"""
    logger.debug(str(argv))


def info(*argv):
    """Info level log"""
    logger.info(str(argv))


def warning(*argv):
    """Warning level log"""
    logger.warning(str(argv))


def error(*argv):
    """Error level log"""
    logger.error(str(argv))


def enable_debug():
    """Turns on debug logging at runtime (used by the --debug flag)"""
    logger.setLevel(logging.DEBUG)
    if not any(
        isinstance(handler, logging.StreamHandler) for handler in logger.handlers
    ):
        logger.addHandler(logging.StreamHandler(sys.stderr))
