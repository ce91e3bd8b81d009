# reports/stats.py
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np

from utils.errors import ContractError


@dataclass(frozen=True)
class BoxStats:
    count: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["outliers"] = list(self.outliers)
        return data


def box_stats(values: Sequence[float]) -> BoxStats:
    """
    Quartiles by linear interpolation between order statistics (type 7).
    Whiskers reach the most extreme data inside 1.5 IQR of the box.
    """
    data = np.sort(np.asarray(list(values), dtype=np.float64))
    if data.size == 0:
        raise ContractError("box statistics need at least one value")
    q1, median, q3 = (float(v) for v in np.quantile(data, [0.25, 0.5, 0.75], method="linear"))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = data[(data >= lo_fence) & (data <= hi_fence)]
    outliers = data[(data < lo_fence) | (data > hi_fence)]
    return BoxStats(
        count=int(data.size),
        median=median,
        q1=q1,
        q3=q3,
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=tuple(float(v) for v in outliers),
    )
