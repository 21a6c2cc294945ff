"""Per-species energy baseline.

A least-squares fit of total energy against element counts; the baseline is
removed before regression and re-added at prediction, and the residual
standard deviation scales the network output so it starts at O(1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..core.structure import Structure


@dataclass(frozen=True)
class SpeciesScaler:
    elements: tuple[int, ...]       # sorted atomic numbers seen in training
    means: tuple[float, ...]        # eV contribution per atom of each element
    scale: float                    # residual std in eV

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if len(self.elements) != len(self.means):
            raise ValueError("elements/means length mismatch")

    def baseline(self, s: Structure) -> float:
        lookup = dict(zip(self.elements, self.means))
        try:
            return float(sum(lookup[z] for z in s.elements))
        except KeyError as exc:
            raise ValueError(
                f"element {exc.args[0]} was not present in training data"
            ) from None

    def remove(self, s: Structure, energy: float) -> float:
        return energy - self.baseline(s)

    def restore(self, s: Structure, residual: float) -> float:
        return residual + self.baseline(s)


def fit_species_scaler(structures: Sequence[Structure],
                       energies: Iterable[float]) -> SpeciesScaler:
    """Least-squares fit E_total ~ sum_e count_e * mean_e.

    A rank-deficient count matrix (an element count that never varies
    independently) falls back to ridge regression with lambda = 1e-6 and a
    warning. Fit on the training split only; the scaler is frozen after.
    """
    energies = np.asarray(list(energies), dtype=float)
    if len(structures) != len(energies) or len(structures) == 0:
        raise ValueError("need one energy per structure, at least one sample")
    elements = tuple(sorted({z for s in structures for z in s.elements}))
    counts = np.zeros((len(structures), len(elements)))
    for row, s in enumerate(structures):
        for z in s.elements:
            counts[row, elements.index(z)] += 1.0

    if np.linalg.matrix_rank(counts) < len(elements):
        warnings.warn(
            "element counts are linearly dependent; falling back to ridge "
            "regression (lambda=1e-6)", stacklevel=2,
        )
        lam = 1e-6
        means = np.linalg.solve(
            counts.T @ counts + lam * np.eye(len(elements)),
            counts.T @ energies,
        )
    else:
        means, *_ = np.linalg.lstsq(counts, energies, rcond=None)

    residuals = energies - counts @ means
    std = float(np.std(residuals))
    if std < 1e-12:
        std = 1.0  # degenerate (exactly linear) data: keep the scale usable
    return SpeciesScaler(elements, tuple(float(m) for m in means), std)
