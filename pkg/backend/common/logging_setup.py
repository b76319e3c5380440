"""
Logging bootstrap for command-line entry points
"""

import logging
from typing import Optional

from common.config import get_settings


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once, honouring the settings level."""
    settings = get_settings()
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format=settings.log_format,
    )
    if settings.debug:
        logging.getLogger("sdpcore.iterations").setLevel(logging.DEBUG)
