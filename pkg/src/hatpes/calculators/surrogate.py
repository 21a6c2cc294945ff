"""Analytic reactive surrogate potential.

Desk-scale stand-in for an electronic-structure backend:

    E = sum over bonded pairs of Morse(r)
      + sum over non-bonded, non-reactive pairs of Lennard-Jones(r)
      + smooth-minimum coupling of the donor-side and acceptor-side Morse
        energies of the transferring hydrogen.

The coupling term -D*ln(exp(-M_d/D) + exp(-M_a/D)) produces a smooth
two-well profile with a finite barrier along a hydrogen transfer path.
Forces are the exact analytic negative gradient, so finite-difference
checks close to machine precision.

Lennard-Jones acts between every pair of atoms that is not directly bonded
(and not one of the two reactive hydrogen pairs). Keeping the geminal 1-3
pairs in the LJ sum is what gives angles a restoring force; without it a
bent three-atom molecule would have a zero-frequency bending mode and no
template could relax to a true minimum.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from ..core.structure import Structure, infer_bonds
from .base import CalcResult

Pair = Tuple[int, int]


def _pair(z1: int, z2: int) -> Pair:
    return (z1, z2) if z1 <= z2 else (z2, z1)


# Per-element Lennard-Jones parameters (eV, Angstrom); the pair table is
# built with Lorentz-Berthelot combination at construction time. Epsilons
# sit a few-fold above tabulated dispersion values so that torsions, whose
# only restoring force here is 1-4+ LJ, are stiff enough for a
# finite-difference Hessian to resolve cleanly.
_LJ_ELEMENT = {
    1: (0.0075, 1.90),
    6: (0.0135, 3.00),
    7: (0.0180, 2.90),
    8: (0.0195, 2.80),
    16: (0.0270, 3.30),
}

# Morse parameters (D_e eV, r_e Angstrom, a 1/Angstrom) per bonded pair.
_MORSE = {
    (1, 1): (4.50, 0.74, 1.90),
    (1, 6): (4.30, 1.09, 1.90),
    (1, 7): (4.00, 1.01, 2.00),
    (1, 8): (4.60, 0.96, 2.20),
    (1, 16): (3.70, 1.34, 1.70),
    (6, 6): (3.80, 1.52, 1.90),
    (6, 7): (3.20, 1.45, 2.00),
    (6, 8): (3.60, 1.41, 2.10),
    (6, 16): (2.80, 1.81, 1.70),
    (7, 7): (2.00, 1.45, 2.00),
    (7, 8): (2.10, 1.40, 2.10),
    (7, 16): (2.00, 1.70, 1.80),
    (8, 8): (1.50, 1.48, 2.20),
    (8, 16): (2.70, 1.57, 1.90),
    (16, 16): (2.20, 2.05, 1.60),
}


class MissingPairParameters(KeyError):
    def __init__(self, kind: str, pair: Pair):
        super().__init__(f"no {kind} parameters for element pair {pair}")
        self.pair = pair


@dataclass(frozen=True)
class SurrogateParams:
    """Parameter tables for the surrogate potential.

    morse maps (z1, z2) with z1 <= z2 to (D_e, r_e, a); lj maps the same
    keys to (epsilon, sigma). hat_delta is the smooth-minimum coupling
    constant in eV.
    """

    morse: Mapping[Pair, Tuple[float, float, float]]
    lj: Mapping[Pair, Tuple[float, float]]
    hat_delta: float = 0.3

    def __post_init__(self):
        for (d, _, a) in self.morse.values():
            if d <= 0 or a <= 0:
                raise ValueError("Morse D_e and a must be strictly positive")
        for (eps, sigma) in self.lj.values():
            if eps <= 0 or sigma <= 0:
                raise ValueError("LJ epsilon and sigma must be strictly positive")
        if self.hat_delta <= 0:
            raise ValueError("hat_delta must be strictly positive")

    def morse_params(self, z1: int, z2: int) -> Tuple[float, float, float]:
        try:
            return self.morse[_pair(z1, z2)]
        except KeyError:
            raise MissingPairParameters("Morse", _pair(z1, z2)) from None

    def lj_params(self, z1: int, z2: int) -> Tuple[float, float]:
        try:
            return self.lj[_pair(z1, z2)]
        except KeyError:
            raise MissingPairParameters("Lennard-Jones", _pair(z1, z2)) from None

    def params_hash(self) -> str:
        blob = json.dumps(
            {
                "morse": {f"{k[0]}-{k[1]}": v for k, v in sorted(self.morse.items())},
                "lj": {f"{k[0]}-{k[1]}": v for k, v in sorted(self.lj.items())},
                "hat_delta": self.hat_delta,
            },
            sort_keys=True,
        ).encode()
        return hashlib.sha256(blob).hexdigest()


def default_surrogate_params(hat_delta: float = 0.3) -> SurrogateParams:
    lj = {}
    zs = sorted(_LJ_ELEMENT)
    for i, z1 in enumerate(zs):
        for z2 in zs[i:]:
            e1, s1 = _LJ_ELEMENT[z1]
            e2, s2 = _LJ_ELEMENT[z2]
            lj[(z1, z2)] = (float(np.sqrt(e1 * e2)), 0.5 * (s1 + s2))
    return SurrogateParams(morse=dict(_MORSE), lj=lj, hat_delta=hat_delta)


def _morse(r, d, re, a):
    ex = np.exp(-a * (r - re))
    e = d * ((1.0 - ex) ** 2 - 1.0)
    dedr = 2.0 * d * a * ex * (1.0 - ex)
    return e, dedr


def _lj(r, eps, sigma):
    sr6 = (sigma / r) ** 6
    sr12 = sr6 * sr6
    e = 4.0 * eps * (sr12 - sr6)
    dedr = 4.0 * eps * (-12.0 * sr12 + 6.0 * sr6) / r
    return e, dedr


@dataclass(frozen=True)
class _Topology:
    """Pair index/parameter arrays for one (elements, bonds, hat) combination."""

    morse_i: np.ndarray
    morse_j: np.ndarray
    morse_d: np.ndarray
    morse_re: np.ndarray
    morse_a: np.ndarray
    lj_i: np.ndarray
    lj_j: np.ndarray
    lj_eps: np.ndarray
    lj_sigma: np.ndarray
    hat: Optional[tuple[int, int, int]]  # (hydrogen, donor, acceptor)
    hat_params: Optional[np.ndarray]     # 2 x (D_e, r_e, a) rows


class SurrogatePotential:
    """Pure, thread-safe analytic calculator."""

    def __init__(self, params: Optional[SurrogateParams] = None):
        self.params = params if params is not None else default_surrogate_params()
        self.provenance = f"surrogate:{self.params.params_hash()[:12]}"
        self._topo_cache: dict = {}
        self._lock = threading.Lock()

    def _topology(self, elements: tuple[int, ...],
                  bonds: tuple[tuple[int, int], ...],
                  donor_h: Optional[int], acceptor: Optional[int]) -> _Topology:
        key = (elements, bonds, donor_h, acceptor)
        topo = self._topo_cache.get(key)
        if topo is not None:
            return topo

        n = len(elements)
        bond_set = {(min(i, j), max(i, j)) for i, j in bonds}
        hat = None
        hat_params = None
        hat_pairs: set[Pair] = set()
        if donor_h is not None:
            if elements[donor_h] != 1:
                raise ValueError(f"atom {donor_h} is not a hydrogen")
            partners = [j for (i, j) in bond_set if i == donor_h]
            partners += [i for (i, j) in bond_set if j == donor_h]
            partners = [p for p in partners if p != acceptor]
            if len(partners) != 1:
                raise ValueError(
                    f"transferring hydrogen {donor_h} must have exactly one "
                    f"bonded partner besides the acceptor, found {partners}"
                )
            donor = partners[0]
            hat = (donor_h, donor, acceptor)
            hat_params = np.array([
                self.params.morse_params(elements[donor_h], elements[donor]),
                self.params.morse_params(elements[donor_h], elements[acceptor]),
            ])
            hat_pairs = {
                (min(donor_h, donor), max(donor_h, donor)),
                (min(donor_h, acceptor), max(donor_h, acceptor)),
            }

        morse_pairs = sorted(bond_set - hat_pairs)
        morse_rows = np.array(
            [self.params.morse_params(elements[i], elements[j])
             for i, j in morse_pairs]
        ).reshape(len(morse_pairs), 3)

        iu, ju = np.triu_indices(n, k=1)
        excluded = bond_set | hat_pairs
        lj_mask = np.array(
            [(int(i), int(j)) not in excluded for i, j in zip(iu, ju)], dtype=bool
        )
        lj_i = iu[lj_mask]
        lj_j = ju[lj_mask]
        lj_rows = np.array(
            [self.params.lj_params(elements[i], elements[j])
             for i, j in zip(lj_i, lj_j)]
        ).reshape(len(lj_i), 2)

        topo = _Topology(
            morse_i=np.array([p[0] for p in morse_pairs], dtype=np.intp),
            morse_j=np.array([p[1] for p in morse_pairs], dtype=np.intp),
            morse_d=morse_rows[:, 0], morse_re=morse_rows[:, 1],
            morse_a=morse_rows[:, 2],
            lj_i=lj_i.astype(np.intp), lj_j=lj_j.astype(np.intp),
            lj_eps=lj_rows[:, 0], lj_sigma=lj_rows[:, 1],
            hat=hat, hat_params=hat_params,
        )
        with self._lock:
            if len(self._topo_cache) > 4096:
                self._topo_cache.clear()
            self._topo_cache[key] = topo
        return topo

    def evaluate(self, s: Structure, donor_h: Optional[int] = None,
                 acceptor: Optional[int] = None) -> CalcResult:
        if (donor_h is None) != (acceptor is None):
            raise ValueError("donor_h and acceptor must be given together")
        bonds = s.bonds if s.bonds is not None else infer_bonds(s)
        topo = self._topology(s.elements, tuple(bonds), donor_h, acceptor)
        pos = s.positions
        grad = np.zeros((s.n_atoms, 3))
        energy = 0.0

        if len(topo.morse_i):
            rvec = pos[topo.morse_i] - pos[topo.morse_j]
            r = np.linalg.norm(rvec, axis=1)
            e, dedr = _morse(r, topo.morse_d, topo.morse_re, topo.morse_a)
            energy += float(e.sum())
            g = (dedr / r)[:, None] * rvec
            np.add.at(grad, topo.morse_i, g)
            np.add.at(grad, topo.morse_j, -g)

        if len(topo.lj_i):
            rvec = pos[topo.lj_i] - pos[topo.lj_j]
            r = np.linalg.norm(rvec, axis=1)
            e, dedr = _lj(r, topo.lj_eps, topo.lj_sigma)
            energy += float(e.sum())
            g = (dedr / r)[:, None] * rvec
            np.add.at(grad, topo.lj_i, g)
            np.add.at(grad, topo.lj_j, -g)

        if topo.hat is not None:
            h, donor, acc = topo.hat
            delta = self.params.hat_delta
            rvec = pos[h] - pos[[donor, acc]]
            r = np.linalg.norm(rvec, axis=1)
            e, dedr = _morse(r, topo.hat_params[:, 0], topo.hat_params[:, 1],
                             topo.hat_params[:, 2])
            m = float(e.min())
            w = np.exp(-(e - m) / delta)
            z = float(w.sum())
            energy += m - delta * np.log(z)
            g = ((w / z) * dedr / r)[:, None] * rvec
            grad[h] += g.sum(axis=0)
            grad[donor] -= g[0]
            grad[acc] -= g[1]

        return CalcResult(energy=energy, forces=-grad, converged=True,
                          provenance=self.provenance)


def surrogate_evaluate(s: Structure, donor_h: Optional[int] = None,
                       acceptor: Optional[int] = None,
                       params: Optional[SurrogateParams] = None) -> CalcResult:
    return SurrogatePotential(params).evaluate(s, donor_h, acceptor)
