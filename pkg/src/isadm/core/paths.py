"""
Path and environment resolution for isadm.
"""
from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

HOME_ENV = "ISADM_HOME"
OFFLINE_ENV = "ISADM_OFFLINE"
LOG_LEVEL_ENV = "ISADM_LOG_LEVEL"

_FALSY = {"0", "false", "no", "off"}


def isadm_home() -> Path:
    """User-level directory holding the optional global config.yaml."""
    value = os.environ.get(HOME_ENV)
    if value:
        return Path(value).expanduser()
    return Path.home() / ".isadm"


def offline_enabled() -> bool:
    """True unless ISADM_OFFLINE is explicitly set to a false value."""
    value = os.environ.get(OFFLINE_ENV, "1").strip().lower()
    return value not in _FALSY


def forced_log_level() -> str | None:
    """Log level forced through ISADM_LOG_LEVEL, if any."""
    value = os.environ.get(LOG_LEVEL_ENV, "").strip()
    return value or None


def data_dir() -> Path:
    """Directory of the fixtures shipped with the package."""
    return Path(str(resources.files("isadm") / "data"))
