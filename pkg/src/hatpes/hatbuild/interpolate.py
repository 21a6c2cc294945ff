"""Linear hydrogen-path interpolation and barrier extraction."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..calculators.base import Calculator
from ..calculators.surrogate import SurrogateParams
from .configs import end_h_position
from .types import InterpolationPath, RadicalSystem, ReactionConfiguration

N_FRAMES = 12  # start + 10 interior + end


def interpolation_positions(system: RadicalSystem,
                            params: Optional[SurrogateParams] = None
                            ) -> np.ndarray:
    """12 hydrogen positions, evenly spaced on the start-to-end segment."""
    start = system.start_h_position
    end = end_h_position(system, params)
    ts = np.arange(N_FRAMES) / (N_FRAMES - 1)
    return start[None, :] + ts[:, None] * (end - start)[None, :]


def barriers_from_energies(energies: Sequence[float]) -> tuple[float, float]:
    """Barrier definition: highest path energy minus each endpoint energy."""
    e = np.asarray(energies, dtype=float)
    peak = float(e.max())
    return peak - float(e[0]), peak - float(e[-1])


def linear_interpolation(system: RadicalSystem, calc: Calculator,
                         params: Optional[SurrogateParams] = None
                         ) -> InterpolationPath:
    """Label all 12 frames and derive left/right barriers.

    Any unconverged label marks the whole path invalid; invalid paths carry
    NaN barriers and are excluded from barrier statistics downstream.
    """
    h_positions = interpolation_positions(system, params)
    frames = []
    energies = []
    forces = []
    valid = True
    for k, h_pos in enumerate(h_positions):
        role = "start" if k == 0 else "end" if k == N_FRAMES - 1 else "interp"
        structure = system.with_h_position(h_pos)
        frames.append(ReactionConfiguration(system, structure, role))
        res = calc.evaluate(structure, system.h_index, system.acceptor_index)
        if not res.converged:
            valid = False
            energies.append(float("nan"))
            forces.append(np.full((structure.n_atoms, 3), float("nan")))
        else:
            energies.append(res.energy)
            forces.append(res.forces)
    if valid:
        barrier_left, barrier_right = barriers_from_energies(energies)
    else:
        barrier_left = barrier_right = float("nan")
    return InterpolationPath(
        system=system,
        frames=tuple(frames),
        energies=tuple(energies),
        forces=tuple(forces),
        valid=valid,
        barrier_left=barrier_left,
        barrier_right=barrier_right,
    )
