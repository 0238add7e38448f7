"""
isadm exceptions.

Every error carries a stable machine-readable ``code`` and the CLI
``exit_code`` it maps to (0 success, 1 usage/config, 2 validation,
3 data/integrity, 4 I/O or network).
"""
from __future__ import annotations

from typing import Optional


class IsadmError(Exception):
    """Base exception for isadm."""
    code = "ISADM_ERROR"
    exit_code = 1

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ConfigError(IsadmError):
    """Raised when a run configuration or CLI usage is invalid."""
    code = "CONFIG_INVALID"
    exit_code = 1


class ModelValidationError(IsadmError):
    """Raised when a system model violates its invariants."""
    code = "MODEL_INVALID"
    exit_code = 2

    def __init__(self, message: str, violations: Optional[list] = None):
        super().__init__(message)
        self.violations = list(violations or [])


class DocumentError(IsadmError):
    """Raised when an input document is malformed or breaks its schema."""
    code = "DOCUMENT_INVALID"
    exit_code = 3


class ModelSyntaxError(DocumentError):
    """Raised when a model document cannot be parsed."""
    code = "MODEL_SYNTAX"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class DatasetError(DocumentError):
    """Raised when an intelligence dataset document is invalid."""
    code = "DATASET_INVALID"


class LayerFormatError(DocumentError):
    """Raised when a Navigator layer document is invalid."""
    code = "LAYER_INVALID"


class CrosswalkError(DocumentError):
    """Raised when a crosswalk, matrix or impact document is invalid."""
    code = "CROSSWALK_INVALID"


class CountermeasureError(DocumentError):
    """Raised when a D3FEND catalog or mapping document is invalid."""
    code = "COUNTERMEASURE_INVALID"


class IntegrityError(IsadmError):
    """Raised on dangling or duplicate references between loaded objects."""
    code = "INTEGRITY"
    exit_code = 3


class UnknownIdError(IsadmError):
    """Raised when a subsystem, group or element id cannot be found."""
    code = "UNKNOWN_ID"
    exit_code = 3


class FetchError(IsadmError):
    """Raised when downloading a dataset fails."""
    code = "FETCH_FAILED"
    exit_code = 4


class OfflineError(FetchError):
    """Raised when network use is attempted while ISADM_OFFLINE is set."""
    code = "OFFLINE"


class OutputError(IsadmError):
    """Raised when outputs cannot be written or the output dir is locked."""
    code = "OUTPUT_FAILED"
    exit_code = 4


class PipelineStageError(IsadmError):
    """Wraps a lower-level error with the pipeline stage and offending path."""
    code = "PIPELINE_STAGE"

    def __init__(self, stage: str, cause: Exception, path: Optional[str] = None):
        where = f" [{path}]" if path else ""
        super().__init__(f"stage '{stage}' failed{where}: {cause}")
        self.stage = stage
        self.path = path
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
        self.code = getattr(cause, "code", self.code)
