#!/usr/bin/env python3
"""Regenerate the packaged template library.

Constructs peptide-like analog fragments from internal-coordinate rules,
relaxes each one to a minimum of the default surrogate potential, verifies
normal-mode analysis succeeds with a clean mode spectrum and that the bond
table matches covalent-radius inference on the relaxed geometry, then writes
one extended-XYZ file per template into src/hatpes/templates/data/.

Run from the repository root:  python3 tools/build_templates.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hatpes.calculators import SurrogatePotential
from hatpes.core import Structure, atomic_number_of, infer_bonds, neighbor_indices
from hatpes.core.xyz import Frame, write_frames
from hatpes.nms import analyze_structure, optimize_geometry

# Bond lengths for initial placement (relaxation adjusts them).
R = {
    ("C", "H"): 1.09, ("N", "H"): 1.01, ("O", "H"): 0.96, ("S", "H"): 1.34,
    ("C", "C"): 1.52, ("C", "N"): 1.45, ("C", "O"): 1.41, ("C", "S"): 1.81,
}


def bond_length(a: str, b: str) -> float:
    return R.get((a, b)) or R[(b, a)]


def unit(v):
    return v / np.linalg.norm(v)


def perp(v):
    ref = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(unit(v), ref)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    return unit(np.cross(v, ref))


def tetra_dirs(to_parent, phase=0.0):
    """Three unit vectors at ~109.5 deg from `to_parent` and each other."""
    d = unit(to_parent)
    u1 = perp(d)
    u2 = np.cross(d, u1)
    cos_t, sin_t = -1.0 / 3.0, np.sqrt(8.0) / 3.0
    out = []
    for k in range(3):
        ang = phase + 2.0 * np.pi * k / 3.0
        out.append(cos_t * d + sin_t * (np.cos(ang) * u1 + np.sin(ang) * u2))
    return out


def trig_dirs(to_parent, phase=0.0):
    """Two unit vectors at 120 deg from `to_parent` (sp2 center)."""
    d = unit(to_parent)
    u1 = perp(d)
    u2 = np.cross(d, u1)
    axis = np.cos(phase) * u1 + np.sin(phase) * u2
    out = []
    for sign in (1.0, -1.0):
        out.append(-0.5 * d + sign * (np.sqrt(3.0) / 2.0) * axis)
    return out


class Mol:
    def __init__(self):
        self.symbols: list[str] = []
        self.coords: list[np.ndarray] = []
        self.bonds: list[tuple[int, int]] = []

    def add(self, symbol: str, pos, parent: int | None = None) -> int:
        self.symbols.append(symbol)
        self.coords.append(np.asarray(pos, dtype=float))
        idx = len(self.symbols) - 1
        if parent is not None:
            self.bonds.append((parent, idx))
        return idx

    def attach(self, symbol: str, parent: int, direction) -> int:
        d = bond_length(self.symbols[parent], symbol)
        return self.add(symbol, self.coords[parent] + d * unit(direction), parent)

    def grow_h(self, parent: int, directions) -> list[int]:
        return [self.attach("H", parent, d) for d in directions]

    def to_structure(self) -> Structure:
        elements = tuple(atomic_number_of(s) for s in self.symbols)
        return Structure(elements, np.array(self.coords), self.bonds)


def methyl(m: Mol, parent: int, direction, phase=0.3) -> int:
    c = m.attach("C", parent, direction)
    m.grow_h(c, tetra_dirs(m.coords[parent] - m.coords[c], phase))
    return c


def carboxyl(m: Mol, parent: int, direction) -> None:
    """-C(=O)-O-H group."""
    c = m.attach("C", parent, direction)
    d1, d2 = trig_dirs(m.coords[parent] - m.coords[c], phase=0.2)
    m.attach("O", c, d1)                     # carbonyl-like oxygen
    oh = m.attach("O", c, d2)
    m.attach("H", oh, trig_dirs(m.coords[c] - m.coords[oh], phase=0.5)[0])


def amide_link(m: Mol, parent: int, direction) -> int:
    """-C(=O)-N(H)- group; returns the nitrogen index."""
    c = m.attach("C", parent, direction)
    d1, d2 = trig_dirs(m.coords[parent] - m.coords[c], phase=0.25)
    m.attach("O", c, d1)
    n = m.attach("N", c, d2)
    dn1, dn2 = trig_dirs(m.coords[c] - m.coords[n], phase=0.45)
    m.attach("H", n, dn1)
    return n, dn2


def amino(m: Mol, parent: int, direction, phase=0.1) -> int:
    n = m.attach("N", parent, direction)
    dirs = tetra_dirs(m.coords[parent] - m.coords[n], phase)
    m.grow_h(n, dirs[:2])
    return n


def backbone_alpha(m: Mol, n_index: int, direction) -> tuple[int, list]:
    """alpha-carbon bonded to the given nitrogen; returns (index, free dirs)."""
    ca = m.attach("C", n_index, direction)
    dirs = tetra_dirs(m.coords[n_index] - m.coords[ca], phase=0.9)
    return ca, dirs


def glycine_analog() -> Mol:
    m = Mol()
    n = m.add("N", [0.0, 0.0, 0.0])
    dirs_n = tetra_dirs(np.array([-1.0, 0.2, 0.1]), phase=0.2)
    m.grow_h(n, dirs_n[:2])
    ca = m.attach("C", n, np.array([1.0, 0.0, 0.0]))
    dirs = tetra_dirs(m.coords[n] - m.coords[ca], phase=0.9)
    m.grow_h(ca, dirs[1:])
    carboxyl(m, ca, dirs[0])
    return m


def alanine_analog() -> Mol:
    m = Mol()
    n = m.add("N", [0.0, 0.0, 0.0])
    m.grow_h(n, tetra_dirs(np.array([-1.0, 0.3, 0.0]), phase=0.4)[:2])
    ca = m.attach("C", n, np.array([1.0, 0.0, 0.0]))
    dirs = tetra_dirs(m.coords[n] - m.coords[ca], phase=0.9)
    m.attach("H", ca, dirs[2])
    methyl(m, ca, dirs[1], phase=0.5)
    carboxyl(m, ca, dirs[0])
    return m


def serine_analog() -> Mol:
    m = Mol()
    n = m.add("N", [0.0, 0.0, 0.0])
    m.grow_h(n, tetra_dirs(np.array([-1.0, 0.25, -0.1]), phase=0.3)[:2])
    ca = m.attach("C", n, np.array([1.0, 0.0, 0.0]))
    dirs = tetra_dirs(m.coords[n] - m.coords[ca], phase=1.2)
    m.attach("H", ca, dirs[2])
    cb = m.attach("C", ca, dirs[1])
    bdirs = tetra_dirs(m.coords[ca] - m.coords[cb], phase=0.8)
    m.grow_h(cb, bdirs[1:])
    o = m.attach("O", cb, bdirs[0])
    m.attach("H", o, tetra_dirs(m.coords[cb] - m.coords[o], phase=0.6)[0])
    carboxyl(m, ca, dirs[0])
    return m


def cysteine_analog() -> Mol:
    m = Mol()
    n = m.add("N", [0.0, 0.0, 0.0])
    m.grow_h(n, tetra_dirs(np.array([-1.0, 0.2, 0.15]), phase=0.35)[:2])
    ca = m.attach("C", n, np.array([1.0, 0.0, 0.0]))
    dirs = tetra_dirs(m.coords[n] - m.coords[ca], phase=1.1)
    m.attach("H", ca, dirs[2])
    cb = m.attach("C", ca, dirs[1])
    bdirs = tetra_dirs(m.coords[ca] - m.coords[cb], phase=0.7)
    m.grow_h(cb, bdirs[1:])
    s = m.attach("S", cb, bdirs[0])
    m.attach("H", s, tetra_dirs(m.coords[cb] - m.coords[s], phase=0.4)[0])
    carboxyl(m, ca, dirs[0])
    return m


def valine_analog() -> Mol:
    m = Mol()
    n = m.add("N", [0.0, 0.0, 0.0])
    m.grow_h(n, tetra_dirs(np.array([-1.0, 0.3, -0.2]), phase=0.25)[:2])
    ca = m.attach("C", n, np.array([1.0, 0.0, 0.0]))
    dirs = tetra_dirs(m.coords[n] - m.coords[ca], phase=1.0)
    m.attach("H", ca, dirs[2])
    cb = m.attach("C", ca, dirs[1])
    bdirs = tetra_dirs(m.coords[ca] - m.coords[cb], phase=0.55)
    m.attach("H", cb, bdirs[2])
    methyl(m, cb, bdirs[0], phase=0.1)
    methyl(m, cb, bdirs[1], phase=0.8)
    carboxyl(m, ca, dirs[0])
    return m


def aminol_scaffold() -> Mol:
    # CH3-CH(NH2)-CH2-OH
    m = Mol()
    c1 = m.add("C", [0.0, 0.0, 0.0])
    m.grow_h(c1, tetra_dirs(np.array([-1.0, 0.1, 0.2]), phase=0.15))
    c2 = m.attach("C", c1, np.array([1.0, 0.15, 0.0]))
    dirs = tetra_dirs(m.coords[c1] - m.coords[c2], phase=0.7)
    m.attach("H", c2, dirs[2])
    amino(m, c2, dirs[1], phase=0.3)
    c3 = m.attach("C", c2, dirs[0])
    d3 = tetra_dirs(m.coords[c2] - m.coords[c3], phase=0.45)
    m.grow_h(c3, d3[1:])
    o = m.attach("O", c3, d3[0])
    m.attach("H", o, tetra_dirs(m.coords[c3] - m.coords[o], phase=0.2)[0])
    return m


def etheramine_scaffold() -> Mol:
    # CH3-O-CH2-CH2-NH2
    m = Mol()
    c1 = m.add("C", [0.0, 0.0, 0.0])
    m.grow_h(c1, tetra_dirs(np.array([-1.0, 0.2, -0.1]), phase=0.6))
    o = m.attach("O", c1, np.array([1.0, 0.1, 0.1]))
    c2 = m.attach("C", o, tetra_dirs(m.coords[c1] - m.coords[o], phase=0.0)[0])
    d2 = tetra_dirs(m.coords[o] - m.coords[c2], phase=0.35)
    m.grow_h(c2, d2[1:])
    c3 = m.attach("C", c2, d2[0])
    d3 = tetra_dirs(m.coords[c2] - m.coords[c3], phase=0.75)
    m.grow_h(c3, d3[1:])
    amino(m, c3, d3[0], phase=0.5)
    return m


def thioether_scaffold() -> Mol:
    # CH3-S-CH2-CH3
    m = Mol()
    c1 = m.add("C", [0.0, 0.0, 0.0])
    m.grow_h(c1, tetra_dirs(np.array([-1.0, 0.15, 0.1]), phase=0.1))
    s = m.attach("S", c1, np.array([1.0, 0.2, 0.0]))
    c2 = m.attach("C", s, tetra_dirs(m.coords[c1] - m.coords[s], phase=0.9)[0])
    d2 = tetra_dirs(m.coords[s] - m.coords[c2], phase=0.4)
    m.grow_h(c2, d2[1:])
    methyl(m, c2, d2[0], phase=0.65)
    return m


def threonine_analog() -> Mol:
    # H2N-CH(CH(OH)CH3)-COOH
    m = Mol()
    n = m.add("N", [0.0, 0.0, 0.0])
    m.grow_h(n, tetra_dirs(np.array([-1.0, 0.22, 0.08]), phase=0.3)[:2])
    ca = m.attach("C", n, np.array([1.0, 0.0, 0.0]))
    dirs = tetra_dirs(m.coords[n] - m.coords[ca], phase=1.3)
    m.attach("H", ca, dirs[2])
    cb = m.attach("C", ca, dirs[1])
    bdirs = tetra_dirs(m.coords[ca] - m.coords[cb], phase=0.9)
    m.attach("H", cb, bdirs[2])
    o = m.attach("O", cb, bdirs[0])
    m.attach("H", o, tetra_dirs(m.coords[cb] - m.coords[o], phase=0.7)[0])
    methyl(m, cb, bdirs[1], phase=0.4)
    carboxyl(m, ca, dirs[0])
    return m


def thioamine_scaffold() -> Mol:
    # CH3-S-CH2-CH2-NH2
    m = Mol()
    c1 = m.add("C", [0.0, 0.0, 0.0])
    m.grow_h(c1, tetra_dirs(np.array([-1.0, 0.18, 0.12]), phase=0.2))
    s = m.attach("S", c1, np.array([1.0, 0.15, 0.05]))
    c2 = m.attach("C", s, tetra_dirs(m.coords[c1] - m.coords[s], phase=0.6)[0])
    d2 = tetra_dirs(m.coords[s] - m.coords[c2], phase=0.3)
    m.grow_h(c2, d2[1:])
    c3 = m.attach("C", c2, d2[0])
    d3 = tetra_dirs(m.coords[c2] - m.coords[c3], phase=0.85)
    m.grow_h(c3, d3[1:])
    amino(m, c3, d3[0], phase=0.45)
    return m


def isopropanol_scaffold() -> Mol:
    # (CH3)2-CH-OH
    m = Mol()
    c = m.add("C", [0.0, 0.0, 0.0])
    dirs = tetra_dirs(np.array([0.3, 1.0, 0.2]), phase=0.15)
    m.attach("H", c, -unit(np.array([0.3, 1.0, 0.2])))
    methyl(m, c, dirs[0], phase=0.3)
    methyl(m, c, dirs[1], phase=0.9)
    o = m.attach("O", c, dirs[2])
    m.attach("H", o, tetra_dirs(m.coords[c] - m.coords[o], phase=0.55)[0])
    return m


def dipeptide_gly_gly() -> Mol:
    # H2N-CH2-C(=O)-NH-CH2-COOH
    m = Mol()
    n1 = m.add("N", [0.0, 0.0, 0.0])
    m.grow_h(n1, tetra_dirs(np.array([-1.0, 0.2, 0.1]), phase=0.2)[:2])
    ca1 = m.attach("C", n1, np.array([1.0, 0.05, 0.0]))
    d1 = tetra_dirs(m.coords[n1] - m.coords[ca1], phase=0.9)
    m.grow_h(ca1, d1[1:])
    n2, free = amide_link(m, ca1, d1[0])
    ca2 = m.attach("C", n2, free)
    d2 = tetra_dirs(m.coords[n2] - m.coords[ca2], phase=0.5)
    m.grow_h(ca2, d2[1:])
    carboxyl(m, ca2, d2[0])
    return m


def dipeptide_gly_ala() -> Mol:
    m = Mol()
    n1 = m.add("N", [0.0, 0.0, 0.0])
    m.grow_h(n1, tetra_dirs(np.array([-1.0, 0.25, -0.05]), phase=0.3)[:2])
    ca1 = m.attach("C", n1, np.array([1.0, 0.1, 0.0]))
    d1 = tetra_dirs(m.coords[n1] - m.coords[ca1], phase=1.2)
    m.grow_h(ca1, d1[1:])
    n2, free = amide_link(m, ca1, d1[0])
    ca2 = m.attach("C", n2, free)
    d2 = tetra_dirs(m.coords[n2] - m.coords[ca2], phase=0.6)
    m.attach("H", ca2, d2[2])
    methyl(m, ca2, d2[1], phase=0.2)
    carboxyl(m, ca2, d2[0])
    return m


def dipeptide_capped_gly() -> Mol:
    # CH3-C(=O)-NH-CH2-C(=O)-NH-CH3
    m = Mol()
    c0 = m.add("C", [0.0, 0.0, 0.0])
    m.grow_h(c0, tetra_dirs(np.array([-1.0, 0.2, 0.1]), phase=0.45))
    n1, free1 = amide_link(m, c0, np.array([1.0, 0.1, 0.05]))
    ca = m.attach("C", n1, free1)
    d = tetra_dirs(m.coords[n1] - m.coords[ca], phase=0.85)
    m.grow_h(ca, d[1:])
    n2, free2 = amide_link(m, ca, d[0])
    methyl(m, n2, free2, phase=0.35)
    return m


def dipeptide_capped_ala() -> Mol:
    # CH3-C(=O)-NH-CH(CH3)-C(=O)-NH-CH3
    m = Mol()
    c0 = m.add("C", [0.0, 0.0, 0.0])
    m.grow_h(c0, tetra_dirs(np.array([-1.0, 0.15, -0.1]), phase=0.55))
    n1, free1 = amide_link(m, c0, np.array([1.0, 0.05, 0.1]))
    ca = m.attach("C", n1, free1)
    d = tetra_dirs(m.coords[n1] - m.coords[ca], phase=1.05)
    m.attach("H", ca, d[2])
    methyl(m, ca, d[1], phase=0.75)
    n2, free2 = amide_link(m, ca, d[0])
    methyl(m, n2, free2, phase=0.15)
    return m


def dipeptide_capped_ser() -> Mol:
    # CH3-C(=O)-NH-CH(CH2OH)-C(=O)-NH-CH3
    m = Mol()
    c0 = m.add("C", [0.0, 0.0, 0.0])
    m.grow_h(c0, tetra_dirs(np.array([-1.0, 0.2, 0.05]), phase=0.65))
    n1, free1 = amide_link(m, c0, np.array([1.0, 0.12, 0.0]))
    ca = m.attach("C", n1, free1)
    d = tetra_dirs(m.coords[n1] - m.coords[ca], phase=0.95)
    m.attach("H", ca, d[2])
    cb = m.attach("C", ca, d[1])
    bd = tetra_dirs(m.coords[ca] - m.coords[cb], phase=0.25)
    m.grow_h(cb, bd[1:])
    o = m.attach("O", cb, bd[0])
    m.attach("H", o, tetra_dirs(m.coords[cb] - m.coords[o], phase=0.8)[0])
    n2, free2 = amide_link(m, ca, d[0])
    methyl(m, n2, free2, phase=0.5)
    return m


TEMPLATES = [
    ("glycine_analog", "aminoacid", "uncapped", glycine_analog),
    ("alanine_analog", "aminoacid", "uncapped", alanine_analog),
    ("serine_analog", "aminoacid", "uncapped", serine_analog),
    ("cysteine_analog", "aminoacid", "uncapped", cysteine_analog),
    ("valine_analog", "aminoacid", "uncapped", valine_analog),
    ("aminol_scaffold", "aminoacid", "uncapped", aminol_scaffold),
    ("etheramine_scaffold", "aminoacid", "uncapped", etheramine_scaffold),
    ("thioether_scaffold", "aminoacid", "uncapped", thioether_scaffold),
    ("threonine_analog", "aminoacid", "uncapped", threonine_analog),
    ("thioamine_scaffold", "aminoacid", "uncapped", thioamine_scaffold),
    ("isopropanol_scaffold", "aminoacid", "uncapped", isopropanol_scaffold),
    ("dipeptide_gly_gly", "dipeptide", "uncapped", dipeptide_gly_gly),
    ("dipeptide_gly_ala", "dipeptide", "uncapped", dipeptide_gly_ala),
    ("dipeptide_capped_gly", "dipeptide", "capped", dipeptide_capped_gly),
    ("dipeptide_capped_ala", "dipeptide", "capped", dipeptide_capped_ala),
    ("dipeptide_capped_ser", "dipeptide", "capped", dipeptide_capped_ser),
]


def eligible_hydrogens(s: Structure) -> list[int]:
    """Hydrogens bonded to exactly one C, N, or O heavy atom."""
    out = []
    for i, z in enumerate(s.elements):
        if z != 1:
            continue
        nbrs = neighbor_indices(s.bonds, i)
        if len(nbrs) == 1 and s.elements[nbrs[0]] in (6, 7, 8):
            out.append(i)
    return out


def newton_polish(s: Structure, calc, iters: int = 30) -> Structure:
    """Newton refinement on the non-singular Hessian subspace with
    backtracking; drives the residual force to ~1e-9 where L-BFGS stalls
    at float64 limits."""
    from hatpes.nms import compute_hessian

    def fmax_of(st):
        return np.max(np.abs(calc.evaluate(st).forces))

    current = fmax_of(s)
    mu = 1e-4
    for _ in range(iters):
        if current < 1e-9:
            break
        g = -calc.evaluate(s).forces.ravel()
        h = compute_hessian(s, calc)
        accepted = False
        for _ in range(12):
            step = np.linalg.solve(h + mu * np.eye(len(g)), g)
            trial = s.with_positions(
                (s.positions.ravel() - step).reshape(-1, 3)
            )
            trial_fmax = fmax_of(trial)
            if trial_fmax < current:
                s, current = trial, trial_fmax
                mu = max(mu / 3.0, 1e-10)
                accepted = True
                break
            mu *= 10.0
        if not accepted:
            break
    return s


def build_one(name, mol_class, capping, factory, calc, out_dir: Path):
    raw = factory().to_structure()
    relaxed = optimize_geometry(raw, calc, tol_force=1e-4, max_steps=5000)
    if relaxed.tags["relaxed"] != "true":
        raise RuntimeError(f"{name}: relaxation did not converge")
    relaxed = newton_polish(relaxed, calc)
    fmax = np.max(np.abs(calc.evaluate(relaxed).forces))
    # residual force must be negligible on the scale of the softest torsion;
    # the decisive quality gates are the mode-spectrum margins below
    if fmax > 5e-5:
        raise RuntimeError(f"{name}: residual force {fmax:.2e} after polish")
    nm = analyze_structure(relaxed, calc)
    if nm.force_constants.min() < 5e-4:
        raise RuntimeError(
            f"{name}: softest retained mode k={nm.force_constants.min():.2e} "
            "is below the finite-difference noise margin"
        )
    inferred = set(infer_bonds(relaxed))
    declared = set(relaxed.bonds)
    if inferred != declared:
        raise RuntimeError(
            f"{name}: bond inference mismatch: extra={inferred - declared}, "
            f"missing={declared - inferred}"
        )
    eligible = eligible_hydrogens(relaxed)
    if not eligible:
        raise RuntimeError(f"{name}: no eligible hydrogens")
    lowest = float(nm.frequencies_cm1.min())
    tagged = relaxed.with_tags(
        template=name,
        template_class=mol_class,
        capping=capping,
        eligible_h=",".join(str(i) for i in eligible),
    )
    # drop relaxation bookkeeping tags before writing
    tags = {k: v for k, v in tagged.tags.items()
            if k not in ("relaxed", "opt_steps")}
    final = Structure(tagged.elements, tagged.positions, tagged.bonds,
                      tagged.charge, tagged.multiplicity, tags)
    write_frames(out_dir / f"{name}.xyz", [Frame(final)])
    print(f"{name:24s} atoms={final.n_atoms:3d} modes={nm.n_modes:3d} "
          f"lowest_freq={lowest:8.1f} cm^-1 eligible_h={len(eligible)}")


def main():
    out_dir = Path(__file__).resolve().parents[1] / "src/hatpes/templates/data"
    out_dir.mkdir(parents=True, exist_ok=True)
    calc = SurrogatePotential()
    for name, mol_class, capping, factory in TEMPLATES:
        build_one(name, mol_class, capping, factory, calc, out_dir)


if __name__ == "__main__":
    main()
