"""
Logging helpers on top of the loguru logger configured in ``bernstein_lab.config``.

Stage banners, configuration dumps, progress lines and a per-run setup for
scripted runs. Every sink writes to stderr or a file; stdout carries CSV data.
"""

from datetime import datetime
from pathlib import Path
import sys
from typing import Any, Mapping

from loguru import logger

CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} | {message}"
BANNER = "=" * 80


def setup_logger(log_dir: str | Path = "logs", log_name: str | None = None,
                 level: str = "INFO") -> Path:
    """
    Replace every sink with a stderr console sink and a per-run log file.

    Args:
        log_dir: Directory of the log file, created if missing
        log_name: File name (default: ``bernstein_lab_<timestamp>.log``)
        level: Console level; the file always records DEBUG

    Returns:
        Path of the log file
    """
    directory = Path(log_dir)
    directory.mkdir(parents=True, exist_ok=True)
    log_file = directory / (log_name or f"bernstein_lab_{datetime.now():%Y%m%d_%H%M%S}.log")

    logger.remove()
    logger.add(sys.stderr, format=CONSOLE_FORMAT, level=level, colorize=True)
    logger.add(log_file, format=FILE_FORMAT, level="DEBUG", rotation="100 MB",
               retention="30 days", compression="zip")

    logger.info(f"Run log: {log_file}")
    return log_file


def log_progress(current: int, total: int, step_name: str = "Processing",
                 interval: int = 10000) -> None:
    """Log ``current / total`` every ``interval`` items and at the last one."""
    if total <= 0:
        return
    if current == total or current % max(1, interval) == 0:
        logger.info(f"{step_name}: {current:,}/{total:,} ({100.0 * current / total:.0f}%)")


def log_pipeline_stage(stage_name: str, stage_number: int | None = None) -> None:
    """Log a stage heading between banner lines, numbered when ``stage_number`` is given."""
    heading = stage_name if stage_number is None else f"STAGE {stage_number}: {stage_name}"
    for line in (BANNER, heading, BANNER):
        logger.info(line)


def log_file_info(file_path: str | Path, description: str = "File") -> None:
    """Log the size of a written file, or warn that it is missing."""
    path = Path(file_path)
    if not path.is_file():
        logger.warning(f"{description} missing: {path}")
        return
    size = path.stat().st_size
    shown = f"{size / 2**20:.2f} MB" if size >= 2**20 else f"{size / 2**10:.1f} KB"
    logger.info(f"{description}: {path} ({shown})")


def log_config(config_dict: Mapping[str, Any], title: str = "Configuration",
               indent: int = 1) -> None:
    """
    Log a configuration one key per line, recursing into nested mappings.

    Args:
        config_dict: Mapping to log, e.g. ``SimConfig.model_dump(mode="json")``
        title: Heading line (skipped for nested levels)
        indent: Indentation depth of the keys
    """
    if indent == 1:
        logger.info(f"{title}:")
    pad = "  " * indent
    for key, value in config_dict.items():
        if isinstance(value, Mapping):
            logger.info(f"{pad}{key}:")
            log_config(value, title, indent + 1)
        else:
            logger.info(f"{pad}{key}: {value}")


__all__ = ["logger", "setup_logger", "log_progress", "log_pipeline_stage", "log_file_info",
           "log_config"]
