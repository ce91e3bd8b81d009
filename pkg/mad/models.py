# mad/models.py
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from utils.errors import ConfigError, ContractError

EXTRACTORS = ("lbp", "bsif", "hog")
LABEL_BONA_FIDE = "bonafide"
LABEL_ATTACK = "attack"
LABELS = (LABEL_BONA_FIDE, LABEL_ATTACK)

MODEL_FORMAT_VERSION = 1


def label_to_int(label: str) -> int:
    """Attack is the positive class."""
    if label == LABEL_ATTACK:
        return 1
    if label == LABEL_BONA_FIDE:
        return 0
    raise ContractError(f"unknown label '{label}' (expected bonafide or attack)")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    extractor_id: str
    config_digest: str

    def __post_init__(self) -> None:
        if self.extractor_id not in EXTRACTORS:
            raise ContractError(f"unknown extractor '{self.extractor_id}'")
        vals = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class LabeledFeature:
    sample_id: str
    label: str
    vector: FeatureVector

    def __post_init__(self) -> None:
        label_to_int(self.label)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """n filters of size l x l; each filter sums to zero."""

    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise ConfigError(f"filter bank must have shape (n, l, l), got {coeffs.shape}")
        if coeffs.shape[0] < 1:
            raise ConfigError("filter bank is empty")
        if coeffs.shape[1] % 2 == 0:
            raise ConfigError(f"filter size must be odd, got {coeffs.shape[1]}")
        means = coeffs.reshape(coeffs.shape[0], -1).mean(axis=1)
        if np.any(np.abs(means) > 1e-9):
            raise ConfigError("every BSIF filter must be zero-mean")
        coeffs = np.ascontiguousarray(coeffs)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def n_filters(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def size(self) -> int:
        return int(self.coefficients.shape[1])


@dataclass(frozen=True, eq=False)
class MadModel:
    extractor_id: str
    config: dict[str, Any]
    config_digest: str
    mean: np.ndarray
    std: np.ndarray
    weights: np.ndarray
    bias: float
    # APCER target (percent) -> score threshold
    operating_thresholds: dict[float, float] = field(default_factory=dict)
    dev_bpcer: dict[float, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        dims = {np.asarray(self.mean).shape, np.asarray(self.std).shape, np.asarray(self.weights).shape}
        if len(dims) != 1:
            raise ContractError(f"model vectors disagree in shape: {sorted(dims)}")

    @property
    def dimension(self) -> int:
        return int(np.asarray(self.weights).shape[0])
