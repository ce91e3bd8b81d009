"""
Small numeric and formatting helpers shared across packages.
"""

import hashlib
import json
import math
from typing import Any, Iterable, Sequence

import numpy as np


def round_half_up(values: np.ndarray | float) -> np.ndarray | float:
    """
    Round to the nearest integer, halves away from -inf (floor(x + 0.5)).
    """
    if isinstance(values, np.ndarray):
        return np.floor(values + 0.5)
    return float(math.floor(values + 0.5))


def to_u8(values: np.ndarray) -> np.ndarray:
    """Round half-up and clamp to [0, 255]."""
    return np.clip(round_half_up(np.asarray(values, dtype=np.float64)), 0, 255).astype(np.uint8)


def format_float(value: float) -> str:
    """
    Shortest text that parses back to the same double.
    """
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def parse_float(text: str) -> float:
    return float(text.strip())


def format_vector(values: Iterable[float]) -> str:
    return ",".join(format_float(v) for v in values)


def parse_vector(text: str) -> np.ndarray:
    text = text.strip()
    if not text:
        return np.zeros(0, dtype=np.float64)
    return np.array([float(v) for v in text.split(",")], dtype=np.float64)


def parse_number_list(text: str | Sequence[float]) -> list[float]:
    """Accept '0.25,0.5,0.25' or an already split sequence."""
    if isinstance(text, str):
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    return [float(v) for v in text]


def stable_digest(payload: Any, length: int = 16) -> str:
    """
    sha256 over canonical JSON; identical configs give identical digests.
    """
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:length]


def array_digest(array: np.ndarray, length: int = 16) -> str:
    data = np.ascontiguousarray(array, dtype=np.float64)
    return hashlib.sha256(data.tobytes()).hexdigest()[:length]


def alpha_tag(alpha: float) -> str:
    """0.3 -> '0.3'; used in file names and morph ids, so it must parse back to alpha."""
    return format_float(alpha)


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def _finite_or_text(obj: Any) -> Any:
    # infinite sentinel thresholds are written as "inf" / "-inf"
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return format_float(value) if math.isinf(value) else value
    if isinstance(obj, dict):
        return {str(k): _finite_or_text(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_text(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_finite_or_text(v) for v in obj.tolist()]
    return obj


def dumps_json(payload: Any) -> str:
    """Deterministic, human-readable JSON used for every report artifact."""
    return json.dumps(
        _finite_or_text(payload), sort_keys=True, indent=2, default=_json_default, allow_nan=False
    ) + "\n"


