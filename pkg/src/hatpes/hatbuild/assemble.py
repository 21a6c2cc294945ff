"""Assembly of intra- and intermolecular radical systems."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..core.rng import RngStream
from ..core.structure import Structure, merge_structures
from ..core.units import covalent_radius
from .radicals import TransferPolicy, radical_site, select_transfer_pair
from .types import RadicalSystem, closest_hydrogen_ok

CHI2_DOF = 3
CHI2_SCALE = 0.6          # Angstrom per unit chi2(3) draw
DISTANCE_RANGE = (1.0, 4.0)
INTERMOLECULAR_CLASH = 1.7  # Angstrom floor, any cross-molecule pair except H-acceptor
MAX_PLACEMENTS = 50


def _clash_thresholds(elems_a, elems_b, bond_scale: float = 1.25) -> np.ndarray:
    """Pairwise clash distances: at least the 1.7 A floor, and always above
    the covalent-radius bond-inference threshold so no spurious bond can
    cross the two molecules."""
    ra = np.array([covalent_radius(z) for z in elems_a])
    rb = np.array([covalent_radius(z) for z in elems_b])
    inference = 1.02 * bond_scale * (ra[:, None] + rb[None, :])
    return np.maximum(INTERMOLECULAR_CLASH, inference)


def sample_target_distance(rng: RngStream,
                           scale: float = CHI2_SCALE,
                           dof: int = CHI2_DOF,
                           bounds: tuple[float, float] = DISTANCE_RANGE) -> float:
    """Hydrogen-acceptor distance: scaled chi-squared, resampled into bounds."""
    lo, hi = bounds
    while True:
        d = float(rng.generator.chisquare(dof)) * scale
        if lo <= d <= hi:
            return d


def _molecule_name(s: Structure, fallback: str) -> str:
    return s.tags.get("template", fallback)


def build_intra_system(radical: Structure, rng: RngStream,
                       policy: Optional[TransferPolicy] = None
                       ) -> Optional[RadicalSystem]:
    """Intramolecular system: transfer within one radical molecule."""
    pair = select_transfer_pair(radical, radical, "intra", rng, policy)
    if pair is None:
        return None
    return RadicalSystem(
        structure=radical,
        h_index=pair.h_index,
        donor_index=pair.donor_index,
        acceptor_index=pair.acceptor_index,
        hat_type="intra",
        molecule_ids=(_molecule_name(radical, "molecule-0"),),
        molecule_index=(0,) * radical.n_atoms,
    )


def assemble_inter_system(mol: Structure, radical: Structure, rng: RngStream,
                          policy: Optional[TransferPolicy] = None,
                          max_placements: int = MAX_PLACEMENTS,
                          distance: Optional[float] = None
                          ) -> Optional[RadicalSystem]:
    """Place the radical molecule around the donor molecule.

    The hydrogen-acceptor distance is drawn once from the truncated scaled
    chi-squared distribution (or taken from ``distance``); up to
    ``max_placements`` random orientations are tried at that distance before
    the pair is rejected. A placement is accepted when no cross-molecule
    pair (other than the reactive hydrogen-acceptor pair) comes closer than
    the clash threshold and the designated hydrogen is the nearest
    transferable one to the radical.
    """
    pair = select_transfer_pair(mol, radical, "inter", rng, policy)
    if pair is None:
        return None
    site = radical_site(radical)
    h_pos = mol.positions[pair.h_index]
    d = sample_target_distance(rng) if distance is None else float(distance)
    thresholds = _clash_thresholds(mol.elements, radical.elements)

    n_mol = mol.n_atoms
    for _ in range(max_placements):
        rot = rng.random_rotation()
        direction = rng.random_unit_vector()
        target = h_pos + d * direction
        moved = (radical.positions - radical.positions[site]) @ rot.T + target
        placed = radical.with_positions(moved)

        diff = mol.positions[:, None, :] - moved[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=-1))
        mask = np.ones_like(dist, dtype=bool)
        mask[pair.h_index, site] = False  # reactive pair is exempt
        if np.any(dist[mask] < thresholds[mask]):
            continue

        merged = merge_structures(mol, placed)
        acceptor = site + n_mol
        if not closest_hydrogen_ok(merged, pair.h_index, acceptor):
            continue
        tags = dict(merged.tags)
        tags["radical_site"] = str(acceptor)
        merged = Structure(merged.elements, merged.positions, merged.bonds,
                           merged.charge, merged.multiplicity, tags)
        return RadicalSystem(
            structure=merged,
            h_index=pair.h_index,
            donor_index=pair.donor_index,
            acceptor_index=acceptor,
            hat_type="inter",
            molecule_ids=(
                _molecule_name(mol, "molecule-0"),
                _molecule_name(radical, "molecule-1"),
            ),
            molecule_index=(0,) * n_mol + (1,) * radical.n_atoms,
        )
    return None
