# tests/conftest.py
import json
from pathlib import Path

import pytest

from isadm.core.config import load_run_config
from isadm.core.paths import data_dir
from isadm.events import WarningEmitted, bus


@pytest.fixture(autouse=True)
def _isolate_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("ISADM_OFFLINE", raising=False)
    monkeypatch.delenv("ISADM_LOG_LEVEL", raising=False)
    monkeypatch.setenv("ISADM_HOME", str(tmp_path / ".isadm"))
    return tmp_path


@pytest.fixture
def fixtures() -> Path:
    """Directory of the shipped case-study fixtures."""
    return data_dir()


@pytest.fixture
def fixture_bytes(fixtures):
    def _read(name: str) -> bytes:
        return (fixtures / name).read_bytes()
    return _read


@pytest.fixture
def run_config(fixtures, tmp_path):
    """Load a shipped run config with its output redirected into tmp."""
    def _load(name: str, **overrides):
        config = load_run_config(fixtures / name)
        return config.with_overrides(out=overrides.pop("out", tmp_path / "out"), **overrides)
    return _load


@pytest.fixture
def warnings_seen():
    """Collect every warning published on the event bus during a test."""
    seen = []
    with bus.subscribed(WarningEmitted, lambda event: seen.append(event.message)):
        yield seen


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp and return its path."""
    def _write(name: str, doc) -> Path:
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        text = doc if isinstance(doc, str) else json.dumps(doc, indent=2)
        path.write_text(text, encoding="utf-8")
        return path
    return _write
