"""Error metrics in the reporting units (meV, meV/A)."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core.units import EV_TO_MEV
from ..core.xyz import Frame
from ..hatbuild.manifest import SystemRecord


@dataclass(frozen=True)
class MetricsReport:
    energy_mae_mev: float
    energy_mae_per_atom_mev: float
    force_mae_mev_ang: float
    n_structures: int
    counts_per_stratum: dict[str, int] = field(default_factory=dict)
    barrier_mae_mev: Optional[float] = None
    n_barrier_systems: int = 0

    def __post_init__(self):
        for value in (self.energy_mae_mev, self.energy_mae_per_atom_mev,
                      self.force_mae_mev_ang):
            if value < 0:
                raise ValueError("MAEs cannot be negative")

    def summary_lines(self) -> list[str]:
        lines = [
            f"energy_mae_mev={self.energy_mae_mev:.4f}",
            f"energy_mae_per_atom_mev={self.energy_mae_per_atom_mev:.4f}",
            f"force_mae_mev_ang={self.force_mae_mev_ang:.4f}",
            f"n_structures={self.n_structures}",
        ]
        if self.barrier_mae_mev is not None:
            lines.append(f"barrier_mae_mev={self.barrier_mae_mev:.4f}")
            lines.append(f"n_barrier_systems={self.n_barrier_systems}")
        return lines


def compute_metrics(predictions: Sequence[tuple[float, np.ndarray]],
                    labels: Sequence[Frame],
                    records: Optional[Sequence[SystemRecord]] = None
                    ) -> MetricsReport:
    """Energy/force MAEs over aligned prediction/label lists.

    Force MAE averages |delta f| over every atom and Cartesian component;
    per-atom energy MAE divides each |delta E| by that structure's atom
    count before averaging.
    """
    if len(predictions) != len(labels):
        raise ValueError(
            f"{len(predictions)} predictions vs {len(labels)} labels"
        )
    if not predictions:
        return MetricsReport(0.0, 0.0, 0.0, 0)
    abs_e = []
    abs_e_per_atom = []
    force_components = []
    for (e_pred, f_pred), frame in zip(predictions, labels):
        if frame.energy is None or frame.forces is None:
            raise ValueError("labels must carry energy and forces")
        de = abs(e_pred - frame.energy)
        abs_e.append(de)
        abs_e_per_atom.append(de / frame.structure.n_atoms)
        force_components.append(np.abs(f_pred - frame.forces).ravel())
    counts = Counter()
    if records is not None:
        for rec in records:
            counts[rec.system_class] += 1
    return MetricsReport(
        energy_mae_mev=float(np.mean(abs_e)) * EV_TO_MEV,
        energy_mae_per_atom_mev=float(np.mean(abs_e_per_atom)) * EV_TO_MEV,
        force_mae_mev_ang=float(np.mean(np.concatenate(force_components)))
        * EV_TO_MEV,
        n_structures=len(labels),
        counts_per_stratum=dict(counts),
    )
