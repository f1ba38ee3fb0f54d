"""Report serialization and schema validation.

JSON reports are written with Python's shortest round-trip float repr, so
every double survives a dump/load cycle unchanged. Tables go to CSV with
17 significant digits.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Optional, TextIO

import jsonschema
import numpy as np
import pandas as pd

from src.config.settings import settings
from src.utils.logger import get_logger

logger = get_logger(__name__)


def to_serializable(obj: Any) -> Any:
    """Convert numpy values, dataclasses and objects with ``to_dict`` into JSON-ready values."""
    if hasattr(obj, "to_dict") and not isinstance(obj, (pd.DataFrame, pd.Series)):
        return to_serializable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_serializable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_serializable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_serializable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_serializable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, pd.DataFrame):
        return to_serializable(obj.to_dict(orient="records"))
    return obj


def validate_report(name: str, payload: Any):
    """Validate against ``schemas/<name>.schema.json``; raises jsonschema.ValidationError."""
    path = settings.schemas_dir / f"{name}.schema.json"
    with open(path, encoding="utf-8") as f:
        schema = json.load(f)
    jsonschema.validate(instance=payload, schema=schema)


def dump_report(payload: Any, path: Optional[Path] = None, stream: Optional[TextIO] = None) -> str:
    """Write a JSON report to ``path``, or to ``stream`` (stdout) when no path is given."""
    text = json.dumps(to_serializable(payload), indent=settings.json_indent, allow_nan=False)
    if path is not None:
        path = Path(path)
        os.makedirs(path.parent, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        logger.info("wrote report to %s", path)
    else:
        (stream or sys.stdout).write(text + "\n")
    return text


def save_table(df: pd.DataFrame, path: Path, index: bool = False):
    """Save a DataFrame to CSV, creating parent dirs."""
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    df.to_csv(path, index=index, float_format="%.17g")
    logger.info("wrote table to %s", path)
