"""Logging configuration for isadm."""
import logging
import logging.handlers
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .paths import isadm_home

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _read_logging_section(path: Optional[Path]) -> Optional[Dict[str, Any]]:
    """The ``logging:`` mapping of a YAML file, or None if absent or unreadable."""
    if path is None or not path.is_file():
        return None
    try:
        doc = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError):
        return None
    if not isinstance(doc, dict) or not isinstance(doc.get("logging"), dict):
        return None
    return doc["logging"]


def _level(name: Optional[str], default: int) -> int:
    if not name:
        return default
    level = logging.getLevelName(str(name).upper())
    return level if isinstance(level, int) else default


def _file_handler(options: Dict[str, Any], formatter: logging.Formatter) -> logging.Handler:
    log_path = Path(options.get("path", isadm_home() / "logs" / "isadm.log")).expanduser()
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(
        log_path,
        maxBytes=options.get("max_bytes", 10485760),
        backupCount=options.get("backup_count", 5),
    )
    handler.setLevel(_level(options.get("level"), logging.DEBUG))
    handler.setFormatter(formatter)
    return handler


def setup_logging(config_path: Optional[Path] = None, force_level: Optional[str] = None):
    """
    Configure the ``isadm`` logger.

    Priority:
    1. force_level (ISADM_LOG_LEVEL)
    2. ``logging:`` section of config_path
    3. ``logging:`` section of $ISADM_HOME/config.yaml
    4. Default: INFO, console handler showing warnings only
    """
    section = _read_logging_section(config_path)
    if section is None:
        section = _read_logging_section(isadm_home() / "config.yaml")
    configured = section is not None
    section = section or {}

    level_name = force_level or section.get("level", "INFO")
    formatter = logging.Formatter(section.get("format", DEFAULT_FORMAT))

    root_logger = logging.getLogger("isadm")
    root_logger.setLevel(_level(level_name, logging.INFO))
    root_logger.handlers.clear()

    handlers = section.get("handlers")
    if not isinstance(handlers, dict):
        handlers = {}

    console = handlers.get("console") or {}
    if console.get("enabled", True):
        console_handler = logging.StreamHandler()
        console_handler.setLevel(_level(console.get("level", force_level), logging.WARNING))
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

    file_options = handlers.get("file") or {}
    if file_options.get("enabled", False):
        root_logger.addHandler(_file_handler(file_options, formatter))

    if configured or force_level:
        root_logger.info(f"Logging configured: level={level_name}")
