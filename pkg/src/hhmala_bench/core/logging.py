import sys

from loguru import logger


def setup_logging(level: str = "INFO", format: str = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {message}"):
    """Setup logging configuration."""
    logger.remove()  # Remove default handler
    logger.add(
        sys.stderr,
        format=format,
        level=level
    )
