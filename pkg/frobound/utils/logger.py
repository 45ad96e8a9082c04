"""
Logging utility for frobound.
"""

import logging
import os
import sys
from datetime import datetime

# Configure logging
def setup_logger(log_level=None, log_dir=None):
    """
    Set up and configure the logger.

    Console output goes to stderr so that tables written to stdout stay byte-stable.

    Args:
        log_level: The logging level (default: FROBOUND_LOG_LEVEL or WARNING)
        log_dir: Directory for a timestamped log file (default: FROBOUND_LOG_DIR, none if unset)

    Returns:
        logger: Configured logger instance
    """
    if log_level is None:
        log_level = getattr(logging, os.environ.get("FROBOUND_LOG_LEVEL", "WARNING").upper(), logging.WARNING)
    if log_dir is None:
        log_dir = os.environ.get("FROBOUND_LOG_DIR")

    logger = logging.getLogger("frobound")
    logger.setLevel(log_level)

    # Clear any existing handlers
    if logger.handlers:
        logger.handlers.clear()

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        log_filename = os.path.join(log_dir, f"frobound_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
        file_handler = logging.FileHandler(log_filename)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger

def set_level(log_level):
    """Change the level of the package logger and its handlers."""
    logger.setLevel(log_level)
    for handler in logger.handlers:
        handler.setLevel(log_level)

# Create a default logger instance
logger = setup_logger()
