import numpy as np


def finite_diff_forces(energy_fn, structure, step=1e-4):
    """Central-difference force oracle: F = -dE/dx, independent of any
    analytic gradient path."""
    n = structure.n_atoms
    forces = np.zeros((n, 3))
    for a in range(n):
        for k in range(3):
            plus = structure.positions.copy()
            minus = structure.positions.copy()
            plus[a, k] += step
            minus[a, k] -= step
            e_plus = energy_fn(structure.with_positions(plus))
            e_minus = energy_fn(structure.with_positions(minus))
            forces[a, k] = -(e_plus - e_minus) / (2.0 * step)
    return forces


def max_rel_force_error(analytic, reference):
    scale = max(np.max(np.abs(reference)), 1e-8)
    return np.max(np.abs(analytic - reference)) / scale
