"""
Report emission: structured JSON, aligned human tables and per-radius CSV.
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.utils import AdsLensError

from .pipelines import Report

logger = logging.getLogger(__name__)

FORMATS = ("human", "structured")


class ReportIOError(AdsLensError):
    """A report or CSV could not be written."""


def to_jsonable(value: Any) -> Any:
    """
    Plain JSON types for report payloads.

    Complex numbers become [re, im]; non-finite floats become null.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(float(value.real)), to_jsonable(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def structured_report(report: Report) -> str:
    """Canonical JSON: sorted keys, full float precision."""
    return json.dumps(to_jsonable(report.to_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _format_complex(z: complex) -> str:
    return f"{z.real:+.6e}{z.imag:+.6e}j"


def _human_matrix(name: str, payload: Dict[str, Any]) -> str:
    rows = [[complex(re, im) for re, im in row] for row in payload["matrix"]]
    frame = pd.DataFrame([[_format_complex(z) for z in row] for row in rows])
    eig = ", ".join(f"{e:.6e}" for e in payload["eigenvalues"])
    return (f"{name} ({payload['verdict']})\n{frame.to_string(index=False, header=False)}\n"
            f"eigenvalues (ascending): {eig}")


def _scalar_items(payload: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in payload.items()
            if isinstance(v, (str, int, float, bool, np.floating)) and k != "status"}


def human_report(report: Report) -> str:
    """Aligned text tables, one block per pipeline."""
    lines = [f"adslens report: family={report.config['family']} kappa={report.config['kappa']}",
             f"exit code: {report.exit_code}", ""]
    for name, payload in report.pipelines.items():
        lines.append(f"== {name}: {payload['status']} ==")
        scalars = _scalar_items(payload)
        if scalars:
            frame = pd.DataFrame({"value": pd.Series(scalars, dtype=object)})
            lines.append(frame.to_string())
        if name == "mass" and "E" in payload:
            lines.append(pd.DataFrame({"E": payload["E"], "beta": payload["beta"]},
                                      index=pd.Index(range(4), name="nu")).to_string())
            P = pd.DataFrame(np.asarray(payload["P"]), columns=["k=1", "k=2", "k=3"],
                             index=pd.Index(range(4), name="nu"))
            lines.append(P.to_string())
        if name == "q-matrices" and "Q1" in payload:
            lines.append(_human_matrix("Q1", payload["Q1"]))
            lines.append(_human_matrix("Q", payload["Q"]))
        table = report.tables.get(name.replace("-", "_"))
        if table is not None and name not in ("mass",):
            lines.append(table.to_string())
        lines.append("")
    lines.append(f"config sha256: {report.provenance['config_sha256']}")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: str = "structured") -> bytes:
    """Render a report as bytes in the requested format."""
    if fmt not in FORMATS:
        raise ValueError(f"Format '{fmt}' not supported; choose from {FORMATS}")
    text = structured_report(report) if fmt == "structured" else human_report(report)
    return text.encode("utf-8")


def write_output(payload: bytes, path: Optional[str]) -> None:
    """Write report bytes to a path; I/O errors name the path."""
    if path is None:
        return
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise ReportIOError(f"Cannot write report to {path}: {exc}") from exc
    logger.info("Report written to %s", path)


def write_csv(report: Report, path: Optional[str]) -> None:
    """Per-radius integrals (one column per (quantity, nu[, k])) as CSV."""
    if path is None:
        return
    frame = report.tables.get("per_radius")
    if frame is None:
        logger.warning("No per-radius data in report; CSV %s not written", path)
        return
    try:
        frame.to_csv(path, float_format="%.17g")
    except OSError as exc:
        raise ReportIOError(f"Cannot write CSV to {path}: {exc}") from exc
    logger.info("Per-radius CSV written to %s", path)
