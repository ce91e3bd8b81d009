# reports/svg.py
"""
SVG figures: vulnerability scatter (S1 vs S2 per attempt), per-subject box
plots and DET curves.

Figures are drawn with matplotlib's Agg/SVG backend with a fixed hash salt,
text kept as text and no date metadata, so the same input writes the same bytes.
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy.stats import norm  # noqa: E402

from evaluation.iso import DetReport  # noqa: E402
from reports.stats import box_stats  # noqa: E402
from storage.files import atomic_write_bytes  # noqa: E402
from utils.errors import ContractError  # noqa: E402

log = logging.getLogger(__name__)

_RC = {
    "svg.hashsalt": "morphage",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
}
QUADRANTS = ("top-right", "top-left", "bottom-left", "bottom-right")


@dataclass(frozen=True)
class ScatterReport:
    """
    Attempt scores of subject 1 (x) against subject 2 (y) with the
    verification threshold drawn on both axes. A point is in the top-right
    quadrant when both scores are strictly above tau, which is exactly an
    FMMPMR success.
    """

    points: tuple[tuple[float, float], ...]
    tau: float
    quadrants: dict[str, int]
    title: str = ""

    @property
    def total(self) -> int:
        return len(self.points)

    def legend(self) -> str:
        return "\n".join(f"{name}: {self.quadrants[name]}/{self.total}" for name in QUADRANTS)


def quadrant_of(point: tuple[float, float], tau: float) -> str:
    right, top = point[0] > tau, point[1] > tau
    if top:
        return "top-right" if right else "top-left"
    return "bottom-right" if right else "bottom-left"


def build_scatter_report(points: Sequence[tuple[float, float]], tau: float, title: str = "") -> ScatterReport:
    """
    Raises:
        ContractError: no points.
    """
    pts = tuple((float(x), float(y)) for x, y in points)
    if not pts:
        raise ContractError("scatter report needs at least one point")
    counts = {name: 0 for name in QUADRANTS}
    for p in pts:
        counts[quadrant_of(p, tau)] += 1
    return ScatterReport(pts, float(tau), counts, title)


def _save(fig: plt.Figure, path: str | Path) -> Path:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    path = atomic_write_bytes(path, buf.getvalue())
    log.info("📊 Saved: %s", path)
    return path


def _padded_limits(values: np.ndarray, tau: float) -> tuple[float, float]:
    lo = float(min(values.min(), tau))
    hi = float(max(values.max(), tau))
    pad = 0.05 * (hi - lo) if hi > lo else 0.05 * max(1.0, abs(hi))
    return lo - pad, hi + pad


def emit_scatter_svg(report: ScatterReport, path: str | Path) -> Path:
    """One marker per attempt, dashed threshold lines and the quadrant legend."""
    if not report.points:
        raise ContractError("scatter report has no points")
    xy = np.array(report.points, dtype=np.float64)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 6))
        ax.scatter(xy[:, 0], xy[:, 1], s=14, c="#2F5597", alpha=0.8, linewidths=0, gid="points")
        ax.axvline(report.tau, color="#C00000", linestyle="--", linewidth=1, gid="tau-x")
        ax.axhline(report.tau, color="#C00000", linestyle="--", linewidth=1, gid="tau-y")
        limits = _padded_limits(xy.ravel(), report.tau)
        ax.set_xlim(limits)
        ax.set_ylim(limits)
        ax.set_xlabel("Score S1 (subject 1 probe)")
        ax.set_ylabel("Score S2 (subject 2 probe)")
        ax.set_title(report.title or f"Morph comparison scores, tau = {report.tau:.4g}")
        ax.text(
            0.02, 0.98, report.legend(), transform=ax.transAxes, va="top", ha="left", fontsize=9,
            bbox={"boxstyle": "round", "facecolor": "white", "alpha": 0.9}, gid="legend",
        )
        fig.tight_layout()
        return _save(fig, path)


def emit_box_svg(groups: Mapping[str, Sequence[float]], path: str | Path, title: str = "") -> Path:
    """
    Box per group from `box_stats` (type-7 quartiles, 1.5 IQR whiskers),
    groups drawn left to right in mapping order.

    Raises:
        ContractError: no groups, or an empty group.
    """
    if not groups:
        raise ContractError("box plot needs at least one group")
    stats = []
    for label, values in groups.items():
        if len(values) == 0:
            raise ContractError(f"box plot group '{label}' is empty")
        b = box_stats(values)
        stats.append({
            "label": label,
            "med": b.median,
            "q1": b.q1,
            "q3": b.q3,
            "whislo": b.whisker_low,
            "whishi": b.whisker_high,
            "fliers": list(b.outliers),
        })
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4, 1.4 * len(stats) + 2), 5))
        ax.bxp(stats, showfliers=True, patch_artist=True,
               boxprops={"facecolor": "#DDEBF7", "edgecolor": "#2F5597"},
               medianprops={"color": "#C00000"})
        ax.set_ylabel("Comparison score")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def _probit(percent: np.ndarray) -> np.ndarray:
    # 0% and 100% sit off the normal-deviate scale; clip to the plotted range
    p = np.clip(percent / 100.0, 1e-4, 1 - 1e-4)
    return norm.ppf(p)


def emit_det_svg(curves: Mapping[str, DetReport], path: str | Path, title: str = "DET curve") -> Path:
    """APCER against BPCER on normal-deviate axes, one line per named report."""
    if not curves:
        raise ContractError("DET plot needs at least one curve")
    ticks = np.array([0.1, 1.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 95.0])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 6))
        for name, report in curves.items():
            apcer = np.array([p.apcer for p in report.det_points])
            bpcer = np.array([p.bpcer for p in report.det_points])
            ax.plot(_probit(apcer), _probit(bpcer), linewidth=1.5, label=f"{name} (D-EER {report.eer_percent:.2f}%)")
        positions = _probit(ticks)
        labels = [f"{t:g}%" for t in ticks]
        ax.set_xticks(positions, labels)
        ax.set_yticks(positions, labels)
        lim = (float(_probit(np.array([0.05]))[0]), float(_probit(np.array([99.0]))[0]))
        ax.set_xlim(lim)
        ax.set_ylim(lim)
        ax.set_xlabel("APCER")
        ax.set_ylabel("BPCER")
        ax.set_title(title)
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        return _save(fig, path)

