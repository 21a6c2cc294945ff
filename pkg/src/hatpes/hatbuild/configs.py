"""Reaction-configuration sampling: displacing the transferring hydrogen."""

from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from ..calculators.base import Calculator
from ..calculators.surrogate import SurrogateParams, default_surrogate_params
from ..core.rng import RngStream
from .types import RadicalSystem, ReactionConfiguration, closest_hydrogen_ok

GLOBAL_CLASH = 0.7          # Angstrom, any pair except the reactive ones
REACTIVE_APPROACH = 0.8     # fraction of the pair Morse r_e
SPHERE_RADIUS_FACTOR = 0.75  # of half the start-H/acceptor separation
DEFAULT_ROLE_PROBS: Mapping[str, float] = {
    "start": 0.25, "end": 0.25, "sampled": 0.5,
}


def end_h_position(system: RadicalSystem,
                   params: Optional[SurrogateParams] = None) -> np.ndarray:
    """Post-transfer hydrogen position: at the acceptor-H equilibrium bond
    length, on the segment from the acceptor toward the start position."""
    params = params or default_surrogate_params()
    s = system.structure
    _, r_e, _ = params.morse_params(1, s.elements[system.acceptor_index])
    direction = system.start_h_position - system.acceptor_position
    return system.acceptor_position + r_e * direction / np.linalg.norm(direction)


def passes_clash_check(system: RadicalSystem, positions: np.ndarray,
                       params: Optional[SurrogateParams] = None) -> bool:
    """Minimum-distance filter.

    Every pair must stay >= 0.7 A apart, except the transferring-H/donor and
    transferring-H/acceptor pairs, which may approach to 0.8 of their Morse
    equilibrium length.
    """
    params = params or default_surrogate_params()
    s = system.structure
    n = len(positions)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    iu, ju = np.triu_indices(n, k=1)
    h, d_idx, a_idx = system.h_index, system.donor_index, system.acceptor_index
    reactive = {(min(h, d_idx), max(h, d_idx)), (min(h, a_idx), max(h, a_idx))}
    for i, j in zip(iu, ju):
        key = (int(i), int(j))
        if key in reactive:
            _, r_e, _ = params.morse_params(s.elements[i], s.elements[j])
            if dist[i, j] < REACTIVE_APPROACH * r_e:
                return False
        elif dist[i, j] < GLOBAL_CLASH:
            return False
    return True


def reference_energy(system: RadicalSystem, calc: Calculator,
                     params: Optional[SurrogateParams] = None) -> float:
    """min(E_start, E_end): the baseline for the energy-outlier filter."""
    s = system.structure
    res_start = calc.evaluate(s, system.h_index, system.acceptor_index)
    end = system.with_h_position(end_h_position(system, params))
    res_end = calc.evaluate(end, system.h_index, system.acceptor_index)
    energies = [r.energy for r in (res_start, res_end) if r.converged]
    if not energies:
        raise RuntimeError("both endpoint evaluations failed")
    return min(energies)


def sample_reaction_configuration(
    system: RadicalSystem,
    rng: RngStream,
    calc: Optional[Calculator] = None,
    max_energy_rise: float = 5.0,
    role_probs: Mapping[str, float] = DEFAULT_ROLE_PROBS,
    params: Optional[SurrogateParams] = None,
    e_ref: Optional[float] = None,
) -> Optional[ReactionConfiguration]:
    """Emit one start / end / sphere-sampled configuration, or a rejection.

    Sphere sampling places the hydrogen at the midpoint of (start position,
    acceptor position) displaced by a uniform radius up to 0.75 of half
    their separation, in a uniform random direction. Configurations failing
    the clash check, the closest-hydrogen condition, or (with a calculator
    attached) the max energy rise above min(E_start, E_end) are rejected.
    """
    roles = sorted(role_probs)
    weights = np.array([role_probs[r] for r in roles])
    role = roles[int(rng.choice(len(roles), p=weights / weights.sum()))]

    if role == "start":
        h_pos = system.start_h_position.copy()
    elif role == "end":
        h_pos = end_h_position(system, params)
    else:
        start = system.start_h_position
        acc = system.acceptor_position
        center = 0.5 * (start + acc)
        d = float(np.linalg.norm(start - acc))
        rho = rng.uniform(0.0, SPHERE_RADIUS_FACTOR * d / 2.0)
        h_pos = center + rho * rng.random_unit_vector()

    positions = system.structure.positions.copy()
    positions[system.h_index] = h_pos
    if not passes_clash_check(system, positions, params):
        return None
    if not closest_hydrogen_ok(system.structure, system.h_index,
                               system.acceptor_index, h_position=h_pos):
        return None
    structure = system.structure.with_positions(positions)
    if calc is not None:
        if e_ref is None:
            e_ref = reference_energy(system, calc, params)
        res = calc.evaluate(structure, system.h_index, system.acceptor_index)
        if not res.converged or res.energy - e_ref > max_energy_rise:
            return None
    return ReactionConfiguration(system, structure, role)
