"""Molecular structures and elementary geometric operations.

A :class:`Structure` is an immutable value object: element list, Cartesian
coordinates in Angstrom, an optional bond table, total charge, spin
multiplicity, and free-form string tags. All downstream records (radical
systems, reaction configurations, labeled samples) embed Structures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .units import covalent_radius


def _canonical_bonds(bonds, n_atoms: int) -> tuple[tuple[int, int], ...]:
    canon = set()
    for pair in bonds:
        i, j = int(pair[0]), int(pair[1])
        if i == j:
            raise ValueError(f"bond ({i}, {j}) connects an atom to itself")
        if not (0 <= i < n_atoms and 0 <= j < n_atoms):
            raise ValueError(f"bond ({i}, {j}) out of range for {n_atoms} atoms")
        canon.add((min(i, j), max(i, j)))
    return tuple(sorted(canon))


@dataclass(frozen=True)
class Structure:
    """Immutable element + coordinate record.

    positions are stored as a read-only float64 array of shape (N, 3) in
    Angstrom; elements as a tuple of atomic numbers. Bond pairs, when
    present, are deduplicated and stored with i < j.
    """

    elements: tuple[int, ...]
    positions: np.ndarray
    bonds: Optional[tuple[tuple[int, int], ...]] = None
    charge: int = 0
    multiplicity: int = 1
    tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        elements = tuple(int(z) for z in self.elements)
        pos = np.array(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must have shape (N, 3), got {pos.shape}")
        if len(elements) != pos.shape[0]:
            raise ValueError(
                f"{len(elements)} elements but {pos.shape[0]} coordinate rows"
            )
        if len(elements) < 1:
            raise ValueError("a structure needs at least one atom")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions contain non-finite values")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")
        pos.setflags(write=False)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "positions", pos)
        if self.bonds is not None:
            object.__setattr__(
                self, "bonds", _canonical_bonds(self.bonds, len(elements))
            )
        object.__setattr__(self, "tags", dict(self.tags))

    @property
    def n_atoms(self) -> int:
        return len(self.elements)

    def with_positions(self, positions: np.ndarray) -> "Structure":
        return Structure(self.elements, positions, self.bonds,
                         self.charge, self.multiplicity, self.tags)

    def with_tags(self, **extra: str) -> "Structure":
        tags = dict(self.tags)
        tags.update({k: str(v) for k, v in extra.items()})
        return Structure(self.elements, self.positions, self.bonds,
                         self.charge, self.multiplicity, tags)

    def with_bonds(self, bonds) -> "Structure":
        return Structure(self.elements, self.positions, bonds,
                         self.charge, self.multiplicity, self.tags)


def distance_matrix(s: Structure) -> np.ndarray:
    """N x N symmetric matrix of Euclidean distances in Angstrom."""
    diff = s.positions[:, None, :] - s.positions[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def infer_bonds(s: Structure, scale: float = 1.25) -> tuple[tuple[int, int], ...]:
    """Covalent-radius bond rule: (i, j) bonded iff d <= scale*(r_i + r_j)."""
    radii = np.array([covalent_radius(z) for z in s.elements])
    dmat = distance_matrix(s)
    thresh = scale * (radii[:, None] + radii[None, :])
    ii, jj = np.nonzero(np.triu(dmat <= thresh, k=1))
    return tuple((int(i), int(j)) for i, j in zip(ii, jj))


def rigid_transform(s: Structure, rotation: np.ndarray,
                    translation: np.ndarray) -> Structure:
    """Map positions x -> R x + t. Elements, bonds and metadata unchanged."""
    rotation = np.asarray(rotation, dtype=np.float64)
    translation = np.asarray(translation, dtype=np.float64)
    if rotation.shape != (3, 3):
        raise ValueError("rotation must be a 3x3 matrix")
    if translation.shape != (3,):
        raise ValueError("translation must be a 3-vector")
    err = np.max(np.abs(rotation.T @ rotation - np.eye(3)))
    if err > 1e-10:
        raise ValueError(f"rotation is not orthonormal (deviation {err:.2e})")
    return s.with_positions(s.positions @ rotation.T + translation)


def bond_graph_distances(n_atoms: int,
                         bonds: Iterable[tuple[int, int]]) -> np.ndarray:
    """All-pairs shortest path lengths over the bond graph.

    Unreachable pairs (different molecules) get a large sentinel value.
    """
    big = np.iinfo(np.int32).max // 4
    dist = np.full((n_atoms, n_atoms), big, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    adj: list[list[int]] = [[] for _ in range(n_atoms)]
    for i, j in bonds:
        adj[i].append(j)
        adj[j].append(i)
    for start in range(n_atoms):
        frontier = [start]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if dist[start, v] > d:
                        dist[start, v] = d
                        nxt.append(v)
            frontier = nxt
    return dist


def neighbor_indices(bonds: Iterable[tuple[int, int]], index: int) -> list[int]:
    out = []
    for i, j in bonds:
        if i == index:
            out.append(j)
        elif j == index:
            out.append(i)
    return sorted(out)


def merge_structures(a: Structure, b: Structure) -> Structure:
    """Concatenate two structures; bond indices of b are offset by len(a)."""
    off = a.n_atoms
    bonds = None
    if a.bonds is not None or b.bonds is not None:
        bonds = tuple(a.bonds or ()) + tuple(
            (i + off, j + off) for i, j in (b.bonds or ())
        )
    tags = dict(a.tags)
    for k, v in b.tags.items():
        tags.setdefault(k, v)
    return Structure(
        a.elements + b.elements,
        np.vstack([a.positions, b.positions]),
        bonds,
        a.charge + b.charge,
        max(a.multiplicity, b.multiplicity),
        tags,
    )
