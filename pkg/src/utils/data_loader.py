"""
Configuration and kernel table IO.

Configurations are read from CSV (header ``x1,...,xd,weight``), from JSON
(``{"d": .., "points": [[..]], "weights": [..]}``) or from a builtin name
written ``builtin:<name>[:d]``.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.features.kernels import Tabulated
from src.features.measures import SphericalConfig, builtin_config
from src.utils.errors import DomainError
from src.utils.logger import get_logger

logger = get_logger(__name__)

_BUILTIN_D = {"icosahedron": 3, "cube": 3}


def _parse_builtin(spec: str, d: Optional[int]) -> SphericalConfig:
    parts = spec.split(":")
    if parts[0] == "ngon":
        if len(parts) < 2:
            raise DomainError("ngon needs a vertex count, e.g. builtin:ngon:6")
        name, rest = f"ngon:{parts[1]}", parts[2:]
        default = 2
    else:
        name, rest = parts[0], parts[1:]
        default = _BUILTIN_D.get(name)
    if rest:
        try:
            d = int(rest[0])
        except ValueError as exc:
            raise DomainError(f"bad dimension in builtin:{spec}") from exc
    d = d if d is not None else default
    if d is None:
        raise DomainError(f"builtin:{name} needs a dimension, e.g. builtin:{name}:3")
    return builtin_config(name, d)


def _as_config(points, weights) -> SphericalConfig:
    """Keep values that already validate bit for bit; normalize the rest."""
    try:
        return SphericalConfig(np.asarray(points, dtype=float), np.asarray(weights, dtype=float))
    except DomainError:
        return SphericalConfig.from_points(points, weights)


def load_config(source: Union[str, Path], d: Optional[int] = None) -> SphericalConfig:
    """Load a configuration from a CSV/JSON file or a ``builtin:`` name."""
    text = str(source)
    if text.startswith("builtin:"):
        return _parse_builtin(text[len("builtin:") :], d)
    path = Path(source)
    if not path.exists():
        raise DomainError(f"configuration file not found: {path}")
    if path.suffix.lower() == ".json":
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        points = np.asarray(data["points"], dtype=float)
        weights = data.get("weights")
        if weights is None:
            config = SphericalConfig.from_points(points)
        else:
            config = _as_config(points, weights)
        if "d" in data and int(data["d"]) != config.d:
            raise DomainError(f"{path}: declared d={data['d']} but points have d={config.d}")
    else:
        df = pd.read_csv(path, float_precision="round_trip")
        coords = [c for c in df.columns if c.startswith("x")]
        if not coords or "weight" not in df.columns:
            raise DomainError(f"{path}: expected columns x1..xd and weight")
        coords.sort(key=lambda c: int(c[1:]))
        config = _as_config(df[coords].to_numpy(dtype=float), df["weight"].to_numpy(dtype=float))
    logger.info("loaded %d atoms on S^%d from %s", config.n_atoms, config.d - 1, path)
    return config


def save_config(config: SphericalConfig, path: Union[str, Path]):
    """Write a configuration as CSV, or as JSON when the suffix is .json."""
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    if path.suffix.lower() == ".json":
        with open(path, "w", encoding="utf-8") as f:
            json.dump(config.to_dict(), f, indent=2)
        return
    df = pd.DataFrame(config.points, columns=[f"x{i + 1}" for i in range(config.d)])
    df["weight"] = config.weights
    df.to_csv(path, index=False, float_format="%.17g")


def load_table_kernel(path: Union[str, Path], order: int = 3) -> Tabulated:
    """Read a ``t,value`` CSV into a tabulated kernel."""
    path = Path(path)
    if not path.exists():
        raise DomainError(f"kernel table not found: {path}")
    df = pd.read_csv(path)
    if not {"t", "value"} <= set(df.columns):
        raise DomainError(f"{path}: expected columns t and value")
    df = df.sort_values("t")
    return Tabulated(df["t"].to_numpy(dtype=float), df["value"].to_numpy(dtype=float), order=order, source=str(path))
