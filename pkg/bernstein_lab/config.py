"""Configuration module for the Bernstein diffusion lab.

This module provides global settings and automatic logging setup using loguru.
It configures console logging on stderr (stdout is reserved for data output)
with tqdm progress bar integration, plus a rotating file log.

Module Attributes:
    PROJECT_ROOT (Path): Root directory of the project
    LOGS_DIR (Path): Directory for log files
    CONFIGS_DIR (Path): Directory holding the bundled model configurations
    THREADS_ENV (str): Environment variable used as fallback for ``--threads``
    logger: Configured loguru logger instance

Example:
    >>> from bernstein_lab.config import logger, default_threads
    >>> logger.info("Simulating paths...")
    >>> workers = default_threads()
"""

import multiprocessing as mp
import os
from pathlib import Path
import sys

from loguru import logger

# Project paths
PROJECT_ROOT = Path(__file__).parent.parent
LOGS_DIR = PROJECT_ROOT / "logs"
CONFIGS_DIR = PROJECT_ROOT / "configs"

THREADS_ENV = "BERNSTEIN_LAB_THREADS"
LOG_LEVEL_ENV = "BERNSTEIN_LAB_LOG_LEVEL"

LOG_LEVEL = os.environ.get(LOG_LEVEL_ENV, "INFO").upper()


def default_threads() -> int:
    """Worker count used when ``--threads`` is not given.

    Reads ``BERNSTEIN_LAB_THREADS`` and falls back to the machine's core count.

    Returns:
        Positive number of worker processes

    Raises:
        ValueError: If the environment variable is set but not a positive integer
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return mp.cpu_count()
    try:
        threads = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if threads < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {threads}")
    return threads


def set_console_level(level: str) -> None:
    """Replace the console handler with one at ``level`` (used by ``--verbose``)."""
    global _console_handler_id
    logger.remove(_console_handler_id)
    _console_handler_id = _add_console_handler(level)


def _add_console_handler(level: str) -> int:
    # Console handler - with tqdm support if available; never writes to stdout
    try:
        from tqdm import tqdm
        return logger.add(
            lambda msg: tqdm.write(msg, end="", file=sys.stderr), colorize=True, level=level
        )
    except ModuleNotFoundError:
        return logger.add(sys.stderr, colorize=True, level=level)


# Remove default handler (if it exists)
try:
    logger.remove(0)
except ValueError:
    pass  # Handler 0 doesn't exist, that's fine

_console_handler_id = _add_console_handler(LOG_LEVEL)

# File handler - logs everything to a file with rotation
try:
    LOGS_DIR.mkdir(exist_ok=True)
    logger.add(
        LOGS_DIR / "bernstein_lab_{time:YYYY-MM-DD}.log",
        rotation="00:00",  # New file at midnight
        retention="30 days",  # Keep logs for 30 days
        level="DEBUG",
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
        backtrace=True,
        diagnose=True,
    )
except OSError as e:
    logger.warning(f"File logging disabled, cannot create {LOGS_DIR}: {e}")

logger.debug("Logging initialized")
