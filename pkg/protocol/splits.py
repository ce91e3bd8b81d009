# protocol/splits.py
import logging
import math
from typing import Optional, Sequence

import numpy as np

from config import settings
from protocol.models import PARTITIONS, DatasetManifest, ProtocolSplit
from utils.errors import ContractError, SizingError
from utils.helpers import round_half_up

log = logging.getLogger(__name__)

RATIO_TOLERANCE = 1e-9


def check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    values = tuple(float(r) for r in ratios)
    if len(values) != 3:
        raise ContractError(f"expected three ratios (train, dev, test), got {len(values)}")
    if any(not math.isfinite(r) or r < 0 for r in values):
        raise ContractError(f"ratios must be finite and non-negative, got {values}")
    if abs(sum(values) - 1.0) > RATIO_TOLERANCE:
        raise ContractError(f"ratios must sum to 1, got {sum(values)!r}")
    return values  # type: ignore[return-value]


def apportion(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """
    Partition sizes for n subjects.

    Every class but the largest-ratio one (first on ties) gets
    round_half_up(ratio * n); the largest class takes the remainder. A class
    with a non-zero ratio that ends up empty borrows one subject from the
    largest class. Sizes are then nudged one subject at a time so they follow
    the ratio order.

    Raises:
        SizingError: fewer subjects than classes with a non-zero ratio.
    """
    ratios = check_ratios(ratios)
    nonzero = [i for i, r in enumerate(ratios) if r > 0]
    if n < len(nonzero):
        raise SizingError(f"{n} subjects cannot fill {len(nonzero)} non-empty partitions")

    largest = max(range(3), key=lambda i: (ratios[i], -i))
    sizes = [0, 0, 0]
    for i in range(3):
        if i != largest:
            sizes[i] = int(round_half_up(ratios[i] * n))
    sizes[largest] = n - sum(sizes)
    if sizes[largest] < 0:
        raise SizingError(f"rounded partition sizes {sizes} exceed n={n}")

    for i in nonzero:
        if sizes[i] == 0:
            donor = max(range(3), key=lambda j: (sizes[j], -j))
            if sizes[donor] <= 1:
                raise SizingError(f"cannot give every non-empty partition a subject with n={n}")
            sizes[donor] -= 1
            sizes[i] += 1
    _restore_ratio_order(sizes, ratios)
    return sizes[0], sizes[1], sizes[2]


def _restore_ratio_order(sizes: list[int], ratios: Sequence[float]) -> None:
    """
    Move single subjects until a class never holds fewer subjects than one
    with a smaller ratio (or an equal ratio and a later position), and equal
    ratios differ by at most one.
    """
    rank = sorted(range(3), key=lambda i: (-ratios[i], i))
    moved = True
    while moved:
        moved = False
        for a, i in enumerate(rank):
            for j in rank[a + 1:]:
                if sizes[i] < sizes[j]:
                    sizes[i] += 1
                    sizes[j] -= 1
                    moved = True
                elif ratios[i] == ratios[j] and sizes[i] - sizes[j] > 1:
                    sizes[i] -= 1
                    sizes[j] += 1
                    moved = True


def split_dataset(
    manifest: DatasetManifest,
    ratios: Sequence[float] = settings.SPLIT_RATIOS,
    seed: int = settings.SEED,
    sizes: Optional[Sequence[int]] = None,
) -> ProtocolSplit:
    """
    Seeded subject-disjoint train/dev/test split.

    Subject ids are sorted, permuted with numpy's PCG64 generator seeded by
    `seed`, then cut into consecutive runs of the apportioned sizes. `sizes`
    overrides the apportionment with explicit counts.

    Raises:
        ContractError: bad ratios.
        SizingError: too few subjects, or explicit sizes that do not add up.
    """
    ratios = check_ratios(ratios)
    ids = sorted(manifest.subject_ids)
    n = len(ids)
    if sizes is not None:
        counts = tuple(int(s) for s in sizes)
        if len(counts) != 3 or any(c < 0 for c in counts):
            raise SizingError(f"explicit sizes must be three non-negative integers, got {tuple(sizes)}")
        if sum(counts) != n:
            raise SizingError(f"explicit sizes {counts} sum to {sum(counts)}, manifest has {n} subjects")
    else:
        counts = apportion(n, ratios)

    order = np.random.default_rng(seed).permutation(n)
    shuffled = [ids[i] for i in order]
    cut1, cut2 = counts[0], counts[0] + counts[1]
    split = ProtocolSplit(
        train_ids=frozenset(shuffled[:cut1]),
        dev_ids=frozenset(shuffled[cut1:cut2]),
        test_ids=frozenset(shuffled[cut2:]),
        seed=int(seed),
        ratios=ratios,
    )
    log.info(
        "✂️ Split %d subjects (seed %d): %s",
        n, seed, ", ".join(f"{name}={size}" for name, size in zip(PARTITIONS, split.sizes)),
    )
    return split
