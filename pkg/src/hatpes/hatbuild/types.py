"""Record types for hydrogen-transfer systems and reaction configurations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core.structure import Structure, infer_bonds

FRAME_ROLES = ("start", "end", "interp", "sampled")


def hydrogens_not_bonded_to(s: Structure, heavy: int) -> list[int]:
    bonds = s.bonds if s.bonds is not None else infer_bonds(s)
    bonded_to_heavy = {j if i == heavy else i for i, j in bonds
                       if heavy in (i, j)}
    return [i for i, z in enumerate(s.elements)
            if z == 1 and i not in bonded_to_heavy]


def closest_hydrogen_ok(s: Structure, h_index: int, acceptor_index: int,
                        h_position: Optional[np.ndarray] = None) -> bool:
    """True if no competing hydrogen sits closer to the acceptor than the
    designated one. Hydrogens bonded to the acceptor itself are part of the
    radical site, not transfer candidates, and are excluded."""
    acc = s.positions[acceptor_index]
    h_pos = s.positions[h_index] if h_position is None else h_position
    d_h = float(np.linalg.norm(h_pos - acc))
    for other in hydrogens_not_bonded_to(s, acceptor_index):
        if other == h_index:
            continue
        if float(np.linalg.norm(s.positions[other] - acc)) < d_h:
            return False
    return True


@dataclass(frozen=True)
class RadicalSystem:
    """A start geometry annotated with the reactive atom indices.

    The transferring hydrogen (h_index) is still bonded to its donor heavy
    atom; the acceptor is the tagged radical site. For intermolecular
    systems the structure is the merged pair and molecule_index records
    per-atom membership.
    """

    structure: Structure
    h_index: int
    donor_index: int
    acceptor_index: int
    hat_type: str
    molecule_ids: tuple[str, ...]
    molecule_index: tuple[int, ...]

    def __post_init__(self):
        s = self.structure
        if self.hat_type not in ("intra", "inter"):
            raise ValueError(f"hat_type must be intra or inter, got {self.hat_type!r}")
        if s.elements[self.h_index] != 1:
            raise ValueError(f"atom {self.h_index} is not a hydrogen")
        if self.acceptor_index == self.donor_index:
            raise ValueError("acceptor and donor must differ")
        if len(self.molecule_index) != s.n_atoms:
            raise ValueError("molecule_index length mismatch")
        bonds = set(s.bonds if s.bonds is not None else infer_bonds(s))
        pair = (min(self.h_index, self.donor_index),
                max(self.h_index, self.donor_index))
        if pair not in bonds and pair not in set(infer_bonds(s)):
            raise ValueError(
                f"hydrogen {self.h_index} is not bonded to donor {self.donor_index}"
            )
        if self.hat_type == "inter":
            if self.molecule_index[self.donor_index] == \
                    self.molecule_index[self.acceptor_index]:
                raise ValueError(
                    "inter-system donor and acceptor must be in different molecules"
                )
        if not closest_hydrogen_ok(s, self.h_index, self.acceptor_index):
            raise ValueError(
                "another hydrogen is closer to the acceptor than the "
                "designated transfer hydrogen"
            )

    @property
    def start_h_position(self) -> np.ndarray:
        return self.structure.positions[self.h_index]

    @property
    def acceptor_position(self) -> np.ndarray:
        return self.structure.positions[self.acceptor_index]

    def with_h_position(self, position: np.ndarray) -> Structure:
        pos = self.structure.positions.copy()
        pos[self.h_index] = position
        return self.structure.with_positions(pos)


@dataclass(frozen=True)
class ReactionConfiguration:
    """One geometry of a radical system with the hydrogen (possibly) moved."""

    system: RadicalSystem
    structure: Structure
    frame_role: str

    def __post_init__(self):
        if self.frame_role not in FRAME_ROLES:
            raise ValueError(f"unknown frame role {self.frame_role!r}")
        if self.structure.n_atoms != self.system.structure.n_atoms:
            raise ValueError("configuration/system atom count mismatch")


@dataclass(frozen=True)
class InterpolationPath:
    """12 frames along the straight hydrogen path with derived barriers."""

    system: RadicalSystem
    frames: tuple[ReactionConfiguration, ...]
    energies: tuple[float, ...]
    forces: tuple[np.ndarray, ...]
    valid: bool
    barrier_left: float
    barrier_right: float

    def __post_init__(self):
        if len(self.frames) != 12 or len(self.energies) != 12:
            raise ValueError("an interpolation path has exactly 12 frames")
