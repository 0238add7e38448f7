"""
File I/O for isadm: input reading, atomic output writes, the output
directory lock and content hashing for the run digest.
"""
import hashlib
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Optional, Union

from .exceptions import ConfigError, OutputError

logger = logging.getLogger("isadm.io")

LOCK_NAME = ".isadm.lock"


def atomic_write(path: Path, content: Union[str, bytes], encoding: str = "utf-8") -> None:
    """Write ``content`` to a sibling temp file, then rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = content.encode(encoding) if isinstance(content, str) else content

    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    tmp_path = Path(tmp_name)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        tmp_path.unlink(missing_ok=True)
        raise


def sha256_file(path: Path) -> str:
    """Hex sha256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class FileLock:
    """
    Exclusive lock on an output directory, held for a whole analysis run.

    The lock is a ``.isadm.lock`` file created with O_EXCL and holding the
    owner's pid. Waiting callers poll until ``timeout`` and then fail with
    ``OutputError`` (code ``OUTPUT_LOCKED``).

    Usage:
        with FileLock(out_dir, timeout=5.0):
            write_outputs(report, out_dir, formats)
    """

    def __init__(self, directory: Path, timeout: float = 5.0, poll_interval: float = 0.1):
        self.directory = Path(directory)
        self.lock_path = self.directory / LOCK_NAME
        self.timeout = timeout
        self.poll_interval = poll_interval
        self._acquired = False

    def _try_create(self) -> bool:
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            return False
        with os.fdopen(fd, "w") as f:
            f.write(str(os.getpid()))
        return True

    def holder(self) -> Optional[str]:
        """Pid recorded in the lock file, if readable."""
        try:
            return self.lock_path.read_text().strip() or None
        except OSError:
            return None

    def acquire(self) -> None:
        """
        Raises:
            OutputError: the lock is still held after ``timeout`` seconds
        """
        self.directory.mkdir(parents=True, exist_ok=True)
        deadline = time.monotonic() + self.timeout

        while not self._try_create():
            if time.monotonic() >= deadline:
                owner = self.holder()
                raise OutputError(
                    f"output directory {self.directory} is locked by another run"
                    f"{f' (pid {owner})' if owner else ''}; remove {self.lock_path} if that run is gone",
                    code="OUTPUT_LOCKED",
                )
            time.sleep(self.poll_interval)
        self._acquired = True
        logger.debug(f"Locked {self.directory}")

    def release(self) -> None:
        if not self._acquired:
            return
        self.lock_path.unlink(missing_ok=True)
        self._acquired = False

    def __enter__(self) -> "FileLock":
        self.acquire()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.release()
        return False


def read_input(path: Path) -> bytes:
    """
    Read an input document.

    Raises:
        ConfigError: the file cannot be read
    """
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
