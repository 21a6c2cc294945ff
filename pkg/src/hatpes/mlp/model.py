"""Invariant message-passing potential over interatomic distances.

Element embeddings pass through continuous-filter convolution blocks: each
edge's distance is expanded in Gaussians under a cosine cutoff envelope, a
two-layer filter network maps the expansion to a per-edge filter, the
filter multiplies the projected neighbor features elementwise, messages are
scatter-summed onto the center atom, and an atomwise network applies a
residual update. An atomwise readout produces per-atom energies that are
summed per molecule and shifted by the per-species baseline. Forces are the
exact negative gradient of that energy with respect to positions, obtained
by reverse-mode differentiation through the whole graph (geometry terms
included).

Everything runs in float64 on CPU; with a fixed seed and single-threaded
execution, construction and inference are bitwise deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from ..core.structure import Structure
from .scaler import SpeciesScaler

DTYPE = torch.float64


@dataclass(frozen=True)
class ModelConfig:
    """Desk-scale defaults; the full-scale profile from the reference
    architecture (6 blocks, 128 features) is constructible but slow on CPU."""

    n_interaction_blocks: int = 2
    feature_dim: int = 32
    n_rbf: int = 25
    rbf_gamma: float = 0.4      # 1/Angstrom^2
    cutoff: float = 5.0         # Angstrom
    readout_hidden: tuple[int, ...] = (16,)
    seed: int = 0

    def __post_init__(self):
        if min(self.n_interaction_blocks, self.feature_dim, self.n_rbf) < 1:
            raise ValueError("all dimensions must be >= 1")
        if self.cutoff <= 0 or self.rbf_gamma <= 0:
            raise ValueError("cutoff and rbf_gamma must be positive")

    @classmethod
    def paper_profile(cls, seed: int = 0) -> "ModelConfig":
        return cls(n_interaction_blocks=6, feature_dim=128,
                   readout_hidden=(64,), seed=seed)


def cutoff_envelope(r: np.ndarray, cutoff: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    env = 0.5 * (np.cos(np.pi * r / cutoff) + 1.0)
    return np.where(r < cutoff, env, 0.0)


def rbf_expand(r: float, cfg: ModelConfig) -> np.ndarray:
    """Gaussian distance expansion under the cosine cutoff envelope."""
    if r < 0:
        raise ValueError("distance must be non-negative")
    centers = np.linspace(0.0, cfg.cutoff, cfg.n_rbf)
    gauss = np.exp(-cfg.rbf_gamma * (r - centers) ** 2)
    return gauss * cutoff_envelope(np.full(cfg.n_rbf, r), cfg.cutoff)


def shifted_softplus(x: torch.Tensor) -> torch.Tensor:
    # ssp(x) = ln(0.5 e^x + 0.5); ssp(0) = 0
    return nn.functional.softplus(x) - math.log(2.0)


class _SSP(nn.Module):
    def forward(self, x):
        return shifted_softplus(x)


def neighbor_pairs(positions: np.ndarray, cutoff: float
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Directed neighbor pairs (i, j) with 0 < |x_i - x_j| <= cutoff."""
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    np.fill_diagonal(dist, np.inf)
    ii, jj = np.nonzero(dist <= cutoff)
    return ii.astype(np.int64), jj.astype(np.int64)


@dataclass
class Batch:
    """Concatenated molecules with per-atom molecule indices."""

    positions: torch.Tensor   # (A, 3)
    z_index: torch.Tensor     # (A,) element vocabulary indices
    mol_index: torch.Tensor   # (A,)
    edge_i: torch.Tensor      # (E,)
    edge_j: torch.Tensor      # (E,)
    n_molecules: int
    atom_counts: tuple[int, ...]


class _Interaction(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        f = cfg.feature_dim
        self.filter_net = nn.Sequential(
            nn.Linear(cfg.n_rbf, f), _SSP(), nn.Linear(f, f), _SSP(),
        )
        self.in_proj = nn.Linear(f, f, bias=False)
        self.update = nn.Sequential(
            nn.Linear(f, f), _SSP(), nn.Linear(f, f),
        )

    def forward(self, x, rbf, edge_i, edge_j):
        w = self.filter_net(rbf)
        messages = self.in_proj(x)[edge_j] * w
        agg = torch.zeros_like(x)
        agg.index_add_(0, edge_i, messages)
        return x + self.update(agg)


class PotentialModel(nn.Module):
    """Energy/force model bound to a fitted per-species scaler."""

    def __init__(self, config: ModelConfig, scaler: SpeciesScaler):
        super().__init__()
        self.config = config
        self.scaler = scaler
        self.element_index = {z: i for i, z in enumerate(scaler.elements)}
        torch.manual_seed(config.seed)
        f = config.feature_dim
        self.embedding = nn.Embedding(len(scaler.elements), f)
        self.interactions = nn.ModuleList(
            _Interaction(config) for _ in range(config.n_interaction_blocks)
        )
        dims = (f, *config.readout_hidden)
        layers: list[nn.Module] = []
        for din, dout in zip(dims[:-1], dims[1:]):
            layers += [nn.Linear(din, dout), _SSP()]
        layers.append(nn.Linear(dims[-1], 1))
        self.readout = nn.Sequential(*layers)
        self.register_buffer(
            "rbf_centers",
            torch.linspace(0.0, config.cutoff, config.n_rbf, dtype=DTYPE),
        )
        self.register_buffer(
            "species_means",
            torch.tensor(scaler.means, dtype=DTYPE),
        )
        self.to(DTYPE)

    # ------------------------------------------------------------- batching

    def z_indices(self, s: Structure) -> np.ndarray:
        try:
            return np.array([self.element_index[z] for z in s.elements],
                            dtype=np.int64)
        except KeyError as exc:
            raise ValueError(
                f"element {exc.args[0]} was not present in training data"
            ) from None

    def make_batch(self, structures: Sequence[Structure]) -> Batch:
        positions = []
        z_idx = []
        mol_idx = []
        edges_i = []
        edges_j = []
        offset = 0
        for m, s in enumerate(structures):
            positions.append(s.positions)
            z_idx.append(self.z_indices(s))
            mol_idx.append(np.full(s.n_atoms, m, dtype=np.int64))
            ei, ej = neighbor_pairs(s.positions, self.config.cutoff)
            edges_i.append(ei + offset)
            edges_j.append(ej + offset)
            offset += s.n_atoms
        return Batch(
            positions=torch.tensor(np.vstack(positions), dtype=DTYPE),
            z_index=torch.tensor(np.concatenate(z_idx)),
            mol_index=torch.tensor(np.concatenate(mol_idx)),
            edge_i=torch.tensor(np.concatenate(edges_i)),
            edge_j=torch.tensor(np.concatenate(edges_j)),
            n_molecules=len(structures),
            atom_counts=tuple(s.n_atoms for s in structures),
        )

    # ------------------------------------------------------------- forward

    def _expand_distances(self, r: torch.Tensor) -> torch.Tensor:
        gauss = torch.exp(-self.config.rbf_gamma
                          * (r[:, None] - self.rbf_centers[None, :]) ** 2)
        env = 0.5 * (torch.cos(math.pi * r / self.config.cutoff) + 1.0)
        env = torch.where(r < self.config.cutoff, env, torch.zeros_like(r))
        return gauss * env[:, None]

    def batch_energies(self, batch: Batch,
                       positions: Optional[torch.Tensor] = None
                       ) -> torch.Tensor:
        """Per-molecule total energies (baseline included)."""
        pos = batch.positions if positions is None else positions
        diff = pos[batch.edge_i] - pos[batch.edge_j]
        r = torch.sqrt((diff * diff).sum(dim=-1))
        rbf = self._expand_distances(r)
        x = self.embedding(batch.z_index)
        for block in self.interactions:
            x = block(x, rbf, batch.edge_i, batch.edge_j)
        atom_energy = self.readout(x).squeeze(-1) * self.scaler.scale
        atom_energy = atom_energy + self.species_means[batch.z_index]
        energies = torch.zeros(batch.n_molecules, dtype=DTYPE)
        energies.index_add_(0, batch.mol_index, atom_energy)
        return energies

    def batch_energies_forces(self, batch: Batch, create_graph: bool = False
                              ) -> tuple[torch.Tensor, torch.Tensor]:
        pos = batch.positions.detach().requires_grad_(True)
        energies = self.batch_energies(batch, pos)
        grad, = torch.autograd.grad(energies.sum(), pos,
                                    create_graph=create_graph)
        return energies, -grad

    # -------------------------------------------------------------- public

    def forward_energy(self, s: Structure) -> float:
        with torch.no_grad():
            return float(self.batch_energies(self.make_batch([s]))[0])

    def forward_forces(self, s: Structure) -> np.ndarray:
        batch = self.make_batch([s])
        _, forces = self.batch_energies_forces(batch)
        return forces.detach().numpy()


def predict_batch(model: PotentialModel, structures: Sequence[Structure],
                  batch_size: int = 32) -> list[tuple[float, np.ndarray]]:
    """Order-preserving energy/force predictions, identical results for any
    batch partitioning."""
    out: list[tuple[float, np.ndarray]] = []
    for lo in range(0, len(structures), batch_size):
        chunk = structures[lo:lo + batch_size]
        batch = model.make_batch(chunk)
        energies, forces = model.batch_energies_forces(batch)
        energies = energies.detach().numpy()
        forces = forces.detach().numpy()
        start = 0
        for k, s in enumerate(chunk):
            out.append((float(energies[k]),
                        forces[start:start + s.n_atoms].copy()))
            start += s.n_atoms
    return out
