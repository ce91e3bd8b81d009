# vulnerability/metrics.py
"""
Morph vulnerability rates. Passing means strictly above tau.

FMMPMR counts (morph, attempt) pairs where every contributing subject
passes on that same attempt. MMPMR counts morphs where every subject passes
on at least one attempt (max over attempts, then min over subjects).
"""

from utils.errors import ContractError
from vulnerability.models import VulnerabilityScoreTable


def fmmpmr_counts(table: VulnerabilityScoreTable, tau: float) -> tuple[int, int]:
    """(fully passing attempts, total attempts)."""
    attempts = table.attempts()
    passing = sum(1 for scores in attempts.values() if all(s > tau for s in scores))
    return passing, len(attempts)


def mmpmr_counts(table: VulnerabilityScoreTable, tau: float) -> tuple[int, int]:
    """(passing morphs, total morphs)."""
    morphs = table.morphs()
    passing = 0
    for rows in morphs.values():
        best = [max(row[k] for row in rows) for k in range(table.k)]
        if min(best) > tau:
            passing += 1
    return passing, len(morphs)


def compute_fmmpmr(table: VulnerabilityScoreTable, tau: float) -> float:
    if table.is_empty:
        raise ContractError("FMMPMR of an empty score table is undefined")
    passing, total = fmmpmr_counts(table, tau)
    return 100.0 * passing / total


def compute_mmpmr(table: VulnerabilityScoreTable, tau: float) -> float:
    if table.is_empty:
        raise ContractError("MMPMR of an empty score table is undefined")
    passing, total = mmpmr_counts(table, tau)
    return 100.0 * passing / total
