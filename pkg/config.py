# config.py
import configparser
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from utils.errors import ConfigError
from utils.helpers import parse_number_list

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    # Protocol
    SEED: int = 2019
    # train, dev, test
    SPLIT_RATIOS: tuple[float, float, float] = (0.50, 0.25, 0.25)
    LANDMARK_COUNT: int = 68
    MAX_PAIRS_PER_SUBJECT: int = 4
    MORPH_SESSION: int = 1
    BONA_FIDE_SESSION: int = 2
    PROBE_SESSION: int = 3

    # Morphing
    ALPHAS: tuple[float, ...] = (0.3, 0.5, 0.7)

    # Vulnerability (FAR = 0.1% for both pairing and verification)
    PAIR_FAR_TARGET: float = 0.001
    VULN_FAR_TARGET: float = 0.001
    COMPARATOR_SIZE: int = 128
    COMPARATOR_LABEL: str = "toy HOG comparator, not a COTS FRS"

    # MAD
    MAD_SIZE: int = 256
    LBP_GRID: int = 4
    LBP_MODE: str = "full256"
    BSIF_FILTERS: int = 8
    BSIF_SIZE: int = 11
    BSIF_GRID: int = 4
    BSIF_SEED: int = 1
    HOG_CELL: int = 8
    HOG_BLOCK: int = 2
    HOG_BINS: int = 9
    SVM_C: float = 1.0
    SVM_EPOCHS: int = 200
    APCER_TARGETS: tuple[float, ...] = (1.0, 5.0, 10.0)

    # Execution
    WORKERS: int = 4
    SHOW_PROGRESS: bool = True

    # Synthetic set
    SYNTH_SUBJECTS: int = 12
    SYNTH_IMAGE_SIZE: int = 128
    SYNTH_CROSS_SUBJECTS: int = 12


settings = Settings()


# -------------------- Run configuration --------------------

ExtractorName = Literal["lbp", "bsif", "hog"]
ExperimentMode = Literal["intra", "cross"]


class RunConfig(BaseModel):
    """
    Everything one `experiment run` needs. Loaded from an INI-style file
    (`[section]` headers, `key = value` lines) and overridden by CLI flags.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    manifest: Optional[Path] = None
    cross_manifest: Optional[Path] = None
    output_root: Path = Path("./runs/latest")
    filterbank: Optional[Path] = None

    seed: int = settings.SEED
    ratios: tuple[float, float, float] = settings.SPLIT_RATIOS
    split_sizes: Optional[tuple[int, int, int]] = None
    alphas: tuple[float, ...] = settings.ALPHAS
    pair_far_target: float = settings.PAIR_FAR_TARGET
    vuln_far_target: float = settings.VULN_FAR_TARGET
    max_pairs_per_subject: int = Field(default=settings.MAX_PAIRS_PER_SUBJECT, ge=1)
    probe_sessions: tuple[int, ...] = (settings.PROBE_SESSION,)

    extractors: tuple[ExtractorName, ...] = ("lbp", "bsif", "hog")
    lbp_grid: int = Field(default=settings.LBP_GRID, ge=1)
    lbp_mode: Literal["full256", "uniform59"] = "full256"
    bsif_filters: int = Field(default=settings.BSIF_FILTERS, ge=1)
    bsif_size: int = Field(default=settings.BSIF_SIZE, ge=1)
    bsif_grid: int = Field(default=settings.BSIF_GRID, ge=1)
    bsif_seed: int = settings.BSIF_SEED
    hog_cell: int = Field(default=settings.HOG_CELL, ge=1)
    svm_c: float = Field(default=settings.SVM_C, gt=0)
    svm_epochs: int = Field(default=settings.SVM_EPOCHS, ge=1)
    apcer_targets: tuple[float, ...] = settings.APCER_TARGETS

    mode: ExperimentMode = "intra"
    workers: int = Field(default=settings.WORKERS, ge=1)
    export_workbook: bool = False

    @field_validator("ratios")
    @classmethod
    def _ratios_sum_to_one(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(r < 0 for r in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"ratios must be non-negative and sum to 1, got {v}")
        return v

    @field_validator("alphas")
    @classmethod
    def _alphas_in_unit_interval(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v or any(not 0.0 <= a <= 1.0 for a in v):
            raise ValueError(f"alpha set must be non-empty and inside [0, 1], got {v}")
        return v

    @field_validator("pair_far_target", "vuln_far_target")
    @classmethod
    def _far_range(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError(f"FAR target must lie in (0, 1], got {v}")
        return v

    @field_validator("apcer_targets")
    @classmethod
    def _apcer_range(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v or any(not 0.0 < t <= 100.0 for t in v):
            raise ValueError(f"APCER targets must lie in (0, 100], got {v}")
        return tuple(sorted(v))

    @model_validator(mode="after")
    def _cross_needs_two_manifests(self) -> "RunConfig":
        if self.mode == "cross" and (self.manifest is None or self.cross_manifest is None):
            raise ValueError("cross mode requires manifest (training bin) and cross_manifest (test bin)")
        return self

    def check_paths(self) -> None:
        """Referenced inputs must exist when the run starts."""
        for label, path in (("manifest", self.manifest), ("cross_manifest", self.cross_manifest),
                            ("filterbank", self.filterbank)):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} not found: {path}")


# Keys allowed per section; values are parsed by pydantic.
_SECTIONS: dict[str, tuple[str, ...]] = {
    "paths": ("manifest", "cross_manifest", "output_root", "filterbank"),
    "protocol": ("seed", "ratios", "split_sizes", "max_pairs_per_subject", "pair_far_target"),
    "morphing": ("alphas",),
    "vulnerability": ("vuln_far_target", "probe_sessions"),
    "mad": ("extractors", "lbp_grid", "lbp_mode", "bsif_filters", "bsif_size", "bsif_grid",
            "bsif_seed", "hog_cell", "svm_c", "svm_epochs", "apcer_targets"),
    "experiment": ("mode", "workers", "export_workbook"),
}
_LIST_KEYS = {"ratios", "split_sizes", "alphas", "apcer_targets", "probe_sessions", "extractors"}


def read_config_file(path: Path) -> dict[str, Any]:
    """
    Flatten a `[section]` / `key = value` file into RunConfig fields.
    Relative paths resolve against the config file's directory.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    values: dict[str, Any] = {}
    for section in parser.sections():
        allowed = _SECTIONS.get(section)
        if allowed is None:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
            if key in _LIST_KEYS:
                parts = [p.strip() for p in raw.split(",") if p.strip()]
                values[key] = tuple(parts)
            else:
                values[key] = raw.strip()

    base = Path(path).parent
    for key in _SECTIONS["paths"]:
        if key in values and not Path(values[key]).is_absolute():
            values[key] = base / values[key]
    return values


def load_run_config(path: Optional[Path] = None, **overrides: Any) -> RunConfig:
    values: dict[str, Any] = read_config_file(path) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e


def split_ratios(text: str) -> tuple[float, float, float]:
    ratios = parse_number_list(text)
    if len(ratios) != 3:
        raise ConfigError(f"expected three ratios, got {text!r}")
    return ratios[0], ratios[1], ratios[2]
