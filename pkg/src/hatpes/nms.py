"""Geometry relaxation, Hessians, normal-mode analysis, and normal-mode
sampling of non-equilibrium structures.

Sampling displaces a relaxed reference along its vibrational modes with
magnitudes drawn from a harmonic energy budget at temperature T:

    R_m = +/- sqrt(3 c_m N kB T / k_m),   c_m >= 0,  sum c_m <= 1

(uniform over the simplex), then rejects draws that stretch or compress any
reference bond by more than a set fraction or that raise the energy more
than ``max_energy_rise`` above the reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize

from .calculators.base import CalcResult, Calculator
from .core.rng import RngStream
from .core.structure import Structure, infer_bonds
from .core.units import KB_EV_PER_K, atomic_mass

# sqrt(eV / (amu * Angstrom^2)) expressed as a wavenumber in 1/cm
_EV_AMU_ANG2 = 1.602176634e-19 / (1.66053906660e-27 * 1e-20)
_FREQ_CM1 = np.sqrt(_EV_AMU_ANG2) / (2.0 * np.pi * 2.99792458e10)


class CalculatorFailure(RuntimeError):
    """An evaluation required by a deterministic algorithm did not converge."""


def _checked(calc: Calculator, s: Structure, donor_h, acceptor) -> CalcResult:
    res = calc.evaluate(s, donor_h, acceptor)
    if not res.converged:
        raise CalculatorFailure(
            f"calculator {res.provenance} failed: {res.message}"
        )
    return res


def optimize_geometry(s: Structure, calc: Calculator, tol_force: float = 1e-3,
                      max_steps: int = 2000, donor_h: Optional[int] = None,
                      acceptor: Optional[int] = None) -> Structure:
    """Local minimization until max |F| component < tol_force.

    Returns the final structure with ``relaxed`` ("true"/"false") and
    ``opt_steps`` recorded in its tags; a step cap or line-search breakdown
    yields the best structure found with relaxed=false rather than an error.
    """
    shape = s.positions.shape

    def fun(x):
        res = _checked(calc, s.with_positions(x.reshape(shape)), donor_h, acceptor)
        return res.energy, -res.forces.ravel()

    out = minimize(
        fun, s.positions.ravel(), jac=True, method="L-BFGS-B",
        options={"maxiter": max_steps, "maxfun": 50 * max_steps,
                 "ftol": 1e-14, "gtol": tol_force},
    )
    final = s.with_positions(out.x.reshape(shape))
    fmax = float(np.max(np.abs(_checked(calc, final, donor_h, acceptor).forces)))
    return final.with_tags(relaxed=str(fmax < tol_force).lower(),
                           opt_steps=str(out.nit))


def compute_hessian(s: Structure, calc: Calculator, step: float = 0.005,
                    donor_h: Optional[int] = None,
                    acceptor: Optional[int] = None) -> np.ndarray:
    """3N x 3N Hessian from central differences of analytic forces.

    H[a][b] = -(F_b(x + d_a) - F_b(x - d_a)) / (2 step), symmetrized.
    """
    n3 = 3 * s.n_atoms
    h = np.zeros((n3, n3))
    flat = s.positions.ravel()
    for a in range(n3):
        plus = flat.copy()
        minus = flat.copy()
        plus[a] += step
        minus[a] -= step
        f_plus = _checked(
            calc, s.with_positions(plus.reshape(-1, 3)), donor_h, acceptor
        ).forces.ravel()
        f_minus = _checked(
            calc, s.with_positions(minus.reshape(-1, 3)), donor_h, acceptor
        ).forces.ravel()
        h[a] = -(f_plus - f_minus) / (2.0 * step)
    return 0.5 * (h + h.T)


@dataclass(frozen=True)
class NormalModes:
    """Vibrational modes of a relaxed reference structure.

    modes holds Cartesian displacement directions (unit norm, one N x 3
    array per mode); mw_modes the orthonormal eigenvectors of the
    mass-weighted Hessian; force_constants the effective constants (eV/A^2)
    along the Cartesian directions, i.e. eigenvalue times reduced mass.
    """

    modes: np.ndarray            # (M, N, 3)
    mw_modes: np.ndarray         # (M, N, 3)
    force_constants: np.ndarray  # (M,)
    frequencies_cm1: np.ndarray  # (M,)
    reference: Structure
    reference_energy: float

    @property
    def n_modes(self) -> int:
        return len(self.force_constants)


def is_linear(s: Structure, tol: float = 1e-6) -> bool:
    """Moment-of-inertia test: smallest/largest principal moment < tol."""
    if s.n_atoms < 3:
        return s.n_atoms == 2
    masses = np.array([atomic_mass(z) for z in s.elements])
    com = (masses[:, None] * s.positions).sum(axis=0) / masses.sum()
    rel = s.positions - com
    inertia = np.zeros((3, 3))
    for m, r in zip(masses, rel):
        inertia += m * (np.dot(r, r) * np.eye(3) - np.outer(r, r))
    moments = np.linalg.eigvalsh(inertia)
    if moments[-1] <= 0:
        return False
    return moments[0] / moments[-1] < tol


def _trans_rot_basis(s: Structure, sqrt_m: np.ndarray) -> np.ndarray:
    """Orthonormal mass-weighted translation/rotation vectors, (3N, k)."""
    n = s.n_atoms
    masses = sqrt_m ** 2
    com = (masses[:, None] * s.positions).sum(axis=0) / masses.sum()
    rel = s.positions - com
    cols = []
    for axis in range(3):
        t = np.zeros((n, 3))
        t[:, axis] = sqrt_m
        cols.append(t.ravel())
    for axis in np.eye(3):
        r = sqrt_m[:, None] * np.cross(axis, rel)
        cols.append(r.ravel())
    basis = np.column_stack(cols)
    q, rdiag = np.linalg.qr(basis)
    keep = np.abs(np.diag(rdiag)) > 1e-8 * np.abs(np.diag(rdiag)).max()
    return q[:, keep]


def normal_mode_analysis(hessian: np.ndarray, s: Structure,
                         reference_energy: float = 0.0,
                         near_zero: float = 1e-6) -> NormalModes:
    """Mass-weight, project out translation/rotation, diagonalize.

    The 6 lowest-|eigenvalue| modes (5 for linear molecules, 3 for a single
    atom) are dropped; more than that many eigenvalues below the near-zero
    threshold, or any negative retained eigenvalue, indicates the reference
    is not a well-conditioned minimum.
    """
    n = s.n_atoms
    if hessian.shape != (3 * n, 3 * n):
        raise ValueError(f"Hessian shape {hessian.shape} does not match {n} atoms")
    if np.max(np.abs(hessian - hessian.T)) > 1e-10:
        raise ValueError("Hessian must be symmetric")
    masses = np.repeat([atomic_mass(z) for z in s.elements], 3)
    inv_sqrt_m = 1.0 / np.sqrt(masses)
    mw = hessian * inv_sqrt_m[:, None] * inv_sqrt_m[None, :]
    # projecting onto the complement of the rigid-body subspace keeps
    # finite-difference noise out of the rotational eigenvalues
    tr = _trans_rot_basis(s, np.sqrt(masses[::3]))
    proj = np.eye(3 * n) - tr @ tr.T
    mw = proj @ mw @ proj
    mw = 0.5 * (mw + mw.T)
    eigvals, eigvecs = np.linalg.eigh(mw)

    if n == 1:
        n_drop = 3
    elif is_linear(s):
        n_drop = 5
    else:
        n_drop = 6
    if int(np.sum(np.abs(eigvals) < near_zero)) > n_drop:
        raise ValueError(
            "more than the expected number of near-zero eigenvalues: "
            "not at a minimum or ill-conditioned Hessian"
        )
    order = np.argsort(np.abs(eigvals))
    kept = np.sort(order[n_drop:])
    lam = eigvals[kept]
    if np.any(lam <= 0):
        raise ValueError(
            f"retained mode with non-positive eigenvalue {lam.min():.3e}: "
            "reference structure is not a minimum"
        )
    vecs = eigvecs[:, kept].T                      # (M, 3N), orthonormal
    cart = vecs * inv_sqrt_m[None, :]              # un-mass-weighted directions
    norms = np.linalg.norm(cart, axis=1)
    reduced_mass = 1.0 / norms ** 2                # amu
    modes = (cart / norms[:, None]).reshape(-1, n, 3)
    force_constants = lam * reduced_mass           # eV/A^2 along `modes`
    return NormalModes(
        modes=modes,
        mw_modes=vecs.reshape(-1, n, 3),
        force_constants=force_constants,
        frequencies_cm1=np.sqrt(lam) * _FREQ_CM1,
        reference=s,
        reference_energy=reference_energy,
    )


def analyze_structure(s: Structure, calc: Calculator,
                      hessian_step: float = 0.005) -> NormalModes:
    """Convenience wrapper: Hessian + analysis at the given geometry."""
    energy = _checked(calc, s, None, None).energy
    return normal_mode_analysis(compute_hessian(s, calc, hessian_step), s, energy)


def draw_mode_displacements(nm: NormalModes, rng: RngStream,
                            temperature: float,
                            min_force_constant: float = 0.1
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Draw simplex fractions c_m and signed displacement magnitudes R_m.

    The harmonic energy of the combined displacement along each mode is
    0.5 k_m R_m^2 = 1.5 c_m N kB T by construction. Force constants below
    ``min_force_constant`` (eV/A^2) are clamped for the magnitude formula:
    the surrogate's torsions are much softer than real ones, and linearized
    displacements along near-flat modes leave the harmonic regime entirely.
    """
    m = nm.n_modes
    simplex = rng.generator.dirichlet(np.ones(m + 1))
    c = simplex[:m]
    signs = rng.choice(np.array([-1.0, 1.0]), size=m)
    budget = 3.0 * c * nm.reference.n_atoms * KB_EV_PER_K * temperature
    k_eff = np.maximum(nm.force_constants, min_force_constant)
    r = signs * np.sqrt(budget / k_eff)
    return c, r


class SampleOutcome(NamedTuple):
    structure: Optional[Structure]
    reason: str  # "accepted" | "bond_strain" | "energy_filter"

    @property
    def accepted(self) -> bool:
        return self.structure is not None


def nms_sample(nm: NormalModes, rng: RngStream, temperature: float = 300.0,
               max_bond_strain: float = 0.25, max_energy_rise: float = 5.0,
               calc: Optional[Calculator] = None,
               min_force_constant: float = 0.1) -> SampleOutcome:
    """One normal-mode sampling attempt; rejection is a sanctioned outcome."""
    ref = nm.reference
    _, r = draw_mode_displacements(nm, rng, temperature, min_force_constant)
    displaced = ref.positions + np.tensordot(r, nm.modes, axes=1)

    bonds = ref.bonds if ref.bonds is not None else infer_bonds(ref)
    if bonds:
        bi = np.array([b[0] for b in bonds])
        bj = np.array([b[1] for b in bonds])
        ref_len = np.linalg.norm(ref.positions[bi] - ref.positions[bj], axis=1)
        new_len = np.linalg.norm(displaced[bi] - displaced[bj], axis=1)
        if np.any(np.abs(new_len - ref_len) / ref_len > max_bond_strain):
            return SampleOutcome(None, "bond_strain")

    candidate = ref.with_positions(displaced)
    if calc is not None:
        energy = _checked(calc, candidate, None, None).energy
        if energy - nm.reference_energy > max_energy_rise:
            return SampleOutcome(None, "energy_filter")
    return SampleOutcome(candidate, "accepted")
