"""
Logging utilities for adaptcast
"""

import logging
from datetime import datetime
from pathlib import Path


def setup_logging(
    debug_mode: bool = False,
    log_prefix: str = "adaptcast",
    log_dir: str | Path | None = "logs",
) -> logging.Logger:
    """
    Set up logging configuration for the ``adaptcast`` package logger

    Args:
        debug_mode: If True, enables debug logging to console and file
        log_prefix: Prefix for log filenames
        log_dir: Directory for the log file; None disables file logging

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger("adaptcast")

    # Clear any existing handlers to avoid duplicates
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    logger.setLevel(logging.DEBUG if debug_mode else logging.INFO)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.DEBUG if debug_mode else logging.INFO)
    console_handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.addHandler(console_handler)

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        log_filename = log_dir / f"{log_prefix}-{datetime.now().strftime('%Y%m%d-%H%M%S')}.log"
        file_handler = logging.FileHandler(log_filename, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG if debug_mode else logging.INFO)
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        logger.addHandler(file_handler)
        logger.debug(f"Logging to file: {log_filename}")

    if debug_mode:
        logger.info("Debug mode enabled - verbose logging active")

    return logger
