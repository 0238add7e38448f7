"""
Services over system model files: validation and STRIDE elicitation.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional

from ..core import dfd, stride
from ..core.io import read_input
from ..core.service_logging import log_service_call
from ..core.service_result import ServiceResult


@log_service_call("validate_model")
def validate_model_file(model_path: Path) -> ServiceResult[Dict[str, Any]]:
    """Parse and validate a model; violations give exit code 2."""
    model = dfd.parse_model(read_input(model_path))
    violations = dfd.validate_model(model)
    data = {"model": model, "violations": violations}

    if violations:
        return ServiceResult.error(
            message=f"{model_path}: {len(violations)} violation(s)",
            code=2,
            data=data,
            error_code="MODEL_INVALID",
        )
    return ServiceResult.ok(
        data=data,
        message=(
            f"{model_path}: valid ({len(model.elements)} elements, "
            f"{len(model.boundaries)} boundaries, {len(model.subsystems)} subsystems)"
        ),
    )


@log_service_call("elicit")
def elicit_file(model_path: Path, matrix_path: Optional[Path] = None) -> ServiceResult[Dict[str, Any]]:
    """STRIDE findings for a whole model, grouped by category."""
    result = validate_model_file(model_path)
    if not result.success:
        return result

    model = result.data["model"]
    matrix = stride.load_matrix(read_input(matrix_path)) if matrix_path else stride.default_matrix()
    findings = stride.elicit_threats(model, matrix)
    return ServiceResult.ok(
        data={"findings": findings, "by_category": stride.findings_by_category(findings)},
        message=f"{len(findings)} findings over {len(model.elements)} elements",
    )
