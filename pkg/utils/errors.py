# utils/errors.py
"""
Exception hierarchy shared by every package.

Contract violations derive from ValueError so callers that only know the
builtin still catch them.
"""

from dataclasses import dataclass
from typing import Optional


class MorphAgeError(Exception):
    """Base class for every error raised on purpose by this toolkit."""


class ContractError(MorphAgeError, ValueError):
    """A precondition of an operation does not hold."""


class ManifestParseError(ContractError):
    def __init__(self, message: str, line_number: Optional[int] = None, path: Optional[str] = None):
        self.line_number = line_number
        self.path = path
        where = ""
        if path:
            where = f"{path}"
        if line_number is not None:
            where = f"{where}:{line_number}" if where else f"line {line_number}"
        super().__init__(f"{where}: {message}" if where else message)


class IntegrityError(ContractError):
    """Manifest content contradicts itself (duplicates, counts, ordering)."""


class SizingError(ContractError):
    """A protocol split cannot be sized for the given subject count."""


class GeometryError(ContractError):
    """Degenerate or collinear geometry."""


class ConfigError(ContractError):
    """Invalid descriptor, filter bank or run configuration."""


class RankError(ConfigError):
    """Not enough independent directions to build the requested filter bank."""


class TrainingError(MorphAgeError):
    """The detector cannot be trained on the supplied data."""


class ProtocolError(MorphAgeError):
    """Experiment protocol violated, e.g. train/test subject overlap."""


@dataclass(frozen=True)
class ItemFailure:
    """A per-item problem that is logged and skipped instead of raised."""

    item_id: str
    reason: str
