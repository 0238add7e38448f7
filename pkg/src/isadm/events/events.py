"""
In-process events for isadm.

Domain modules publish warnings and the pipeline publishes stage progress;
whoever runs an analysis subscribes for the duration of the run.
"""
import logging
import uuid
from collections import defaultdict
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Callable, DefaultDict, Iterator, List, Optional, Type

logger = logging.getLogger("isadm.events")

_current_run: ContextVar[Optional[str]] = ContextVar("isadm_run_id", default=None)


@dataclass(frozen=True)
class WarningEmitted:
    source: str
    message: str
    run_id: Optional[str] = None


@dataclass(frozen=True)
class StageStarted:
    stage: str


@dataclass(frozen=True)
class StageCompleted:
    stage: str
    duration_ms: float


@dataclass(frozen=True)
class ReportWritten:
    path: str
    format: str


Handler = Callable[[Any], None]


class EventBus:
    """Synchronous publish/subscribe keyed by event type."""

    def __init__(self):
        self._handlers: DefaultDict[Type, List[Handler]] = defaultdict(list)

    def subscribe(self, event_type: Type, handler: Handler) -> None:
        self._handlers[event_type].append(handler)

    def unsubscribe(self, event_type: Type, handler: Handler) -> None:
        handlers = self._handlers.get(event_type, [])
        if handler in handlers:
            handlers.remove(handler)

    @contextmanager
    def subscribed(self, event_type: Type, handler: Handler) -> Iterator[None]:
        """Keep ``handler`` subscribed while the block runs."""
        self.subscribe(event_type, handler)
        try:
            yield
        finally:
            self.unsubscribe(event_type, handler)

    def publish(self, event: Any) -> None:
        """Deliver to every handler; a failing handler is logged and skipped."""
        for handler in list(self._handlers.get(type(event), [])):
            try:
                handler(event)
            except Exception:
                logger.debug("event handler failed for %s", type(event).__name__, exc_info=True)


bus = EventBus()


@contextmanager
def run_scope() -> Iterator[str]:
    """
    Tag warnings emitted in this context with a fresh run id.

    Worker threads only see the id when started through
    ``contextvars.copy_context().run``.
    """
    run_id = uuid.uuid4().hex
    token = _current_run.set(run_id)
    try:
        yield run_id
    finally:
        _current_run.reset(token)


def emit_warning(source: str, message: str) -> None:
    """Log a warning under ``isadm.<source>`` and publish it on the bus."""
    logging.getLogger(f"isadm.{source}").warning(message)
    bus.publish(WarningEmitted(source=source, message=message, run_id=_current_run.get()))
