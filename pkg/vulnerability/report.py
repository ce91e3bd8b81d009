# vulnerability/report.py
import logging
from typing import Mapping, Optional, Sequence

from config import settings
from reports.stats import box_stats
from utils.errors import ContractError
from utils.helpers import alpha_tag
from vulnerability.metrics import fmmpmr_counts, mmpmr_counts
from vulnerability.models import AlphaBreakdown, CalibrationResult, VulnerabilityReport, VulnerabilityScoreTable

log = logging.getLogger(__name__)


def split_by_alpha(table: VulnerabilityScoreTable) -> dict[float, VulnerabilityScoreTable]:
    """Group entries on the `@alpha` suffix of their morph ids."""
    grouped: dict[float, list] = {}
    for entry in table.entries:
        _, sep, tag = entry.morph_id.rpartition("@")
        if not sep:
            raise ContractError(f"morph id '{entry.morph_id}' carries no '@alpha' suffix")
        try:
            alpha = float(tag)
        except ValueError as e:
            raise ContractError(f"morph id '{entry.morph_id}' has a bad alpha suffix") from e
        grouped.setdefault(alpha, []).append(entry)
    return {a: VulnerabilityScoreTable(tuple(rows), k=table.k) for a, rows in sorted(grouped.items())}


def build_vulnerability_report(
    tables: Mapping[float, Optional[VulnerabilityScoreTable]],
    tau: float,
    calibration: Optional[CalibrationResult] = None,
    comparator_label: str = settings.COMPARATOR_LABEL,
    expected_alphas: Sequence[float] = (),
) -> VulnerabilityReport:
    """
    Per-alpha and pooled FMMPMR / MMPMR plus scatter and box data.

    Alphas whose table is missing or empty are left out of the breakdown and
    listed in `missing_alphas`. Pooled FMMPMR weighs alphas by attempt count,
    pooled MMPMR by morph count.

    Raises:
        ContractError: no alpha has any scores.
    """
    slots: dict[float, Optional[VulnerabilityScoreTable]] = {float(a): None for a in expected_alphas}
    slots.update({float(a): t for a, t in tables.items()})

    per_alpha: dict[float, AlphaBreakdown] = {}
    scatter: dict[float, list[tuple[float, float]]] = {}
    box: dict[float, dict[str, dict]] = {}
    missing: list[float] = []
    f_pass = f_total = m_pass = m_total = 0

    for alpha in sorted(slots):
        table = slots[alpha]
        if table is None or table.is_empty:
            missing.append(alpha)
            log.warning("⚠️ No scores for alpha=%s; left out of the report", alpha_tag(alpha))
            continue
        fp, ft = fmmpmr_counts(table, tau)
        mp, mt = mmpmr_counts(table, tau)
        f_pass, f_total, m_pass, m_total = f_pass + fp, f_total + ft, m_pass + mp, m_total + mt
        per_alpha[alpha] = AlphaBreakdown(
            alpha=alpha,
            fmmpmr_percent=100.0 * fp / ft,
            mmpmr_percent=100.0 * mp / mt,
            morph_count=mt,
            attempt_count=ft,
        )
        if table.k == 2:
            scatter[alpha] = [(s[0], s[1]) for s in table.attempts().values()]
        box[alpha] = {f"S{k}": box_stats(table.subject_scores(k)).to_dict() for k in range(1, table.k + 1)}

    if not per_alpha:
        raise ContractError("vulnerability report needs at least one non-empty score table")

    return VulnerabilityReport(
        fmmpmr_percent=100.0 * f_pass / f_total,
        mmpmr_percent=100.0 * m_pass / m_total,
        tau=tau,
        per_alpha=per_alpha,
        scatter=scatter,
        box=box,
        missing_alphas=tuple(missing),
        comparator_label=comparator_label,
        calibration=calibration,
        metadata={"has_missing_alphas": bool(missing), "attempts": f_total, "morphs": m_total},
    )
