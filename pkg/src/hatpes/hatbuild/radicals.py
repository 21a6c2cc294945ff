"""Radical creation and transfer-pair selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..core.rng import RngStream
from ..core.structure import (
    Structure,
    bond_graph_distances,
    infer_bonds,
    neighbor_indices,
)
from .types import closest_hydrogen_ok


def removable_hydrogens(s: Structure) -> list[int]:
    """Hydrogens bonded to exactly one heavy atom."""
    bonds = s.bonds if s.bonds is not None else infer_bonds(s)
    out = []
    for i, z in enumerate(s.elements):
        if z != 1:
            continue
        nbrs = neighbor_indices(bonds, i)
        if len(nbrs) == 1 and s.elements[nbrs[0]] != 1:
            out.append(i)
    return out


def make_radical(s: Structure, h_removal_index: Optional[int] = None,
                 rng: Optional[RngStream] = None) -> Structure:
    """Remove one hydrogen, producing a doublet with a tagged radical site.

    With ``h_removal_index=None`` a removable hydrogen is drawn uniformly
    (requires rng). Bond indices are remapped to the shortened atom list.
    """
    bonds = s.bonds if s.bonds is not None else infer_bonds(s)
    if h_removal_index is None:
        candidates = removable_hydrogens(s)
        if not candidates:
            raise ValueError("no removable hydrogen in structure")
        if rng is None:
            raise ValueError("rng required when h_removal_index is None")
        h_removal_index = candidates[int(rng.integers(0, len(candidates)))]
    h = int(h_removal_index)
    if not 0 <= h < s.n_atoms:
        raise ValueError(f"index {h} out of range")
    if s.elements[h] != 1:
        raise ValueError(f"atom {h} is not a hydrogen")
    nbrs = neighbor_indices(bonds, h)
    if len(nbrs) != 1:
        raise ValueError(
            f"hydrogen {h} has {len(nbrs)} bonds; exactly one is required"
        )
    site_old = nbrs[0]
    remap = {old: old - (1 if old > h else 0) for old in range(s.n_atoms)
             if old != h}
    new_bonds = tuple(
        (remap[i], remap[j]) for i, j in bonds if h not in (i, j)
    )
    keep = [i for i in range(s.n_atoms) if i != h]
    tags = dict(s.tags)
    tags["radical_site"] = str(remap[site_old])
    return Structure(
        tuple(s.elements[i] for i in keep),
        s.positions[keep],
        new_bonds,
        s.charge,
        2,
        tags,
    )


def radical_site(s: Structure) -> int:
    try:
        return int(s.tags["radical_site"])
    except (KeyError, ValueError):
        raise ValueError("structure carries no radical_site tag") from None


@dataclass(frozen=True)
class TransferPolicy:
    """Eligibility conditions for the transferring hydrogen.

    donor_elements restricts which heavy atoms may donate (default C, N, O;
    set to frozenset({6}) for C-H only). min_bond_separation applies to
    intramolecular donor/acceptor pairs.
    """

    donor_elements: frozenset[int] = frozenset({6, 7, 8})
    min_bond_separation: int = 3


class TransferPair(NamedTuple):
    h_index: int
    donor_index: int
    acceptor_index: int


def eligible_transfer_hydrogens(s: Structure, policy: TransferPolicy) -> list[int]:
    bonds = s.bonds if s.bonds is not None else infer_bonds(s)
    out = []
    for i, z in enumerate(s.elements):
        if z != 1:
            continue
        nbrs = neighbor_indices(bonds, i)
        if len(nbrs) == 1 and s.elements[nbrs[0]] in policy.donor_elements:
            out.append(i)
    return out


def select_transfer_pair(donor_mol: Structure, acceptor_radical: Structure,
                         hat_type: str, rng: RngStream,
                         policy: Optional[TransferPolicy] = None
                         ) -> Optional[TransferPair]:
    """Uniformly sample an eligible hydrogen and validate the pairing.

    Returns None (a rejection, not an error) when no hydrogen is eligible
    or the sampled candidate violates the distance/separation conditions;
    callers resample. For intermolecular pairs the geometric closest-H
    condition is enforced later, at assembly time, once the two molecules
    have been placed.
    """
    policy = policy or TransferPolicy()
    intra = hat_type == "intra"
    if intra and donor_mol is not acceptor_radical:
        raise ValueError("intra selection requires a single structure")
    acceptor = radical_site(acceptor_radical)

    candidates = eligible_transfer_hydrogens(donor_mol, policy)
    if intra:
        candidates = [h for h in candidates if h != acceptor]
    if not candidates:
        return None
    h = candidates[int(rng.integers(0, len(candidates)))]
    bonds = donor_mol.bonds if donor_mol.bonds is not None \
        else infer_bonds(donor_mol)
    donor = neighbor_indices(bonds, h)[0]

    if intra:
        if donor == acceptor:
            return None
        graph = bond_graph_distances(donor_mol.n_atoms, bonds)
        if graph[donor, acceptor] < policy.min_bond_separation:
            return None
        if not closest_hydrogen_ok(donor_mol, h, acceptor):
            return None
    return TransferPair(h, donor, acceptor)
