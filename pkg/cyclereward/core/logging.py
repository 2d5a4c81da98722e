import logging
import sys
from typing import Optional, TextIO


def configure_logging(level: str = "INFO", fmt: str = "%(asctime)s | %(levelname)s | %(name)s | %(message)s",
                      stream: Optional[TextIO] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=fmt,
        handlers=[logging.StreamHandler(stream if stream is not None else sys.stdout)],
        force=True,
    )
    # numpy RuntimeWarnings land in the run log next to the iteration lines
    logging.captureWarnings(True)
