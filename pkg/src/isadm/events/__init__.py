from .events import (
    EventBus,
    ReportWritten,
    StageCompleted,
    StageStarted,
    WarningEmitted,
    bus,
    emit_warning,
    run_scope,
)

__all__ = [
    "EventBus",
    "ReportWritten",
    "StageCompleted",
    "StageStarted",
    "WarningEmitted",
    "bus",
    "emit_warning",
    "run_scope",
]
