"""
JSON report helpers for the command line. CSV tables live in app.numerics.tables.
"""

import dataclasses
import json
import math
import sys
from typing import Any, Dict, Optional, TextIO

import numpy as np

from app.geometry.tip_sample import MonteCarloTotal


def to_jsonable(value: Any) -> Any:
    """
    Convert reports into plain JSON types: arrays become nested lists, numpy
    scalars become Python numbers and non-finite floats become None.
    """
    if isinstance(value, MonteCarloTotal):
        return {"value": to_jsonable(value.value), "std_error": to_jsonable(value.std_error), "samples": value.samples}
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(dataclasses.asdict(value))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_report(report: Dict[str, Any]) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(to_jsonable(report), indent=2, allow_nan=False)


def emit_report(report: Dict[str, Any], stream: Optional[TextIO] = None) -> None:
    """Write a report as JSON to stdout (or the given stream)"""
    stream = stream or sys.stdout
    stream.write(dumps_report(report))
    stream.write("\n")
    stream.flush()
