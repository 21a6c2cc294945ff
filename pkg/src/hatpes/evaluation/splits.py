"""Stratified train/val/test splitting over manifest records.

Splitting happens at the system level: an interpolation record keeps its 12
frames together by construction, so no system's frames can straddle splits.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..core.rng import RngStream
from ..hatbuild.manifest import SystemRecord

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)  # train, val, test
    seed: int = 0

    def __post_init__(self):
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be three non-negative numbers")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError(f"fractions sum to {sum(self.fractions)}, expected 1")


def _allocate(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder allocation; every positive-fraction split gets at
    least one system when the stratum is large enough to cover them."""
    targets = [n * f for f in fractions]
    counts = [int(t) for t in targets]
    remainders = [t - c for t, c in zip(targets, counts)]
    for _ in range(n - sum(counts)):
        k = int(np.argmax(remainders))
        counts[k] += 1
        remainders[k] = -1.0
    active = [i for i, f in enumerate(fractions) if f > 0]
    if n >= len(active):
        for i in active:
            while counts[i] == 0:
                donor = int(np.argmax(counts))
                counts[donor] -= 1
                counts[i] += 1
    return counts


def stratified_split(records: Sequence[SystemRecord],
                     spec: SplitSpec) -> list[SystemRecord]:
    """Assign splits per stratum (hat type x molecule-class pair).

    Returns new records with ``split`` set, in the original order. Re-runs
    with the same seed produce identical assignments.
    """
    strata: dict[str, list[int]] = defaultdict(list)
    for idx, rec in enumerate(records):
        strata[rec.system_class].append(idx)

    assignment: dict[int, str] = {}
    for stratum in sorted(strata):
        indices = np.array(strata[stratum])
        if len(indices) < 3:
            warnings.warn(
                f"stratum {stratum!r} has only {len(indices)} systems; "
                "it cannot cover every split", stacklevel=2,
            )
        rng = RngStream(spec.seed, f"split/{stratum}")
        rng.shuffle(indices)
        counts = _allocate(len(indices), spec.fractions)
        cursor = 0
        for name, count in zip(SPLIT_NAMES, counts):
            for idx in indices[cursor:cursor + count]:
                assignment[int(idx)] = name
            cursor += count
    return [replace(rec, split=assignment[i]) for i, rec in enumerate(records)]
