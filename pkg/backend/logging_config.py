"""Logging setup shared by the library and the CLI."""

import logging
import os
from typing import Optional

from dotenv import load_dotenv
from rich.logging import RichHandler

LOG_ENV_VAR = "RGP_LOG"
DEFAULT_LEVEL = "INFO"

_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """
    Configure the root logger with a rich handler on stderr.

    Args:
        level: Log level name (defaults to RGP_LOG from env/.env, or INFO)

    Raises:
        ValueError: If the level name is not a known logging level
    """
    global _configured
    load_dotenv()

    name = (level or os.getenv(LOG_ENV_VAR) or DEFAULT_LEVEL).strip().upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level in {LOG_ENV_VAR}: {name}")

    root = logging.getLogger()
    if not _configured:
        handler = RichHandler(show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
        root.addHandler(handler)
        _configured = True
    root.setLevel(numeric)
