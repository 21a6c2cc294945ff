"""Training loop: Adam, warmup + exponential decay, weighted E/F loss."""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch

from ..core.rng import RngStream
from ..core.xyz import Frame
from .model import DTYPE, Batch, PotentialModel


@dataclass(frozen=True)
class TrainConfig:
    lr_init: float = 1e-3
    lr_decay: float = 0.995         # per epoch, after one warmup epoch
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    w_energy: float = 1.0
    w_forces: float = 49.0
    batch_size: int = 32
    max_epochs: int = 200
    patience: Optional[int] = None  # early stop on stagnant validation loss
    seed: int = 0
    deterministic: bool = True      # single-threaded torch execution
    # When True, energy and force residuals are divided by the scaler's
    # residual std inside the loss. Off by default: training regresses
    # baseline-subtracted energies without std scaling.
    normalize_energy_residuals: bool = False

    def __post_init__(self):
        if self.lr_init <= 0:
            raise ValueError("learning rate must be positive")
        if self.w_energy < 0 or self.w_forces < 0:
            raise ValueError("loss weights must be >= 0")

    def config_hash(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def lr_for_epoch(cfg: TrainConfig, epoch: int) -> float:
    """Learning rate for a 0-based epoch index; epoch 0 is the warmup epoch
    (ramped per batch inside the loop), epoch k >= 1 follows
    lr_init * decay^(k-1)."""
    if epoch <= 0:
        return cfg.lr_init
    return cfg.lr_init * cfg.lr_decay ** (epoch - 1)


@dataclass
class TrainResult:
    model: PotentialModel
    history: list[dict]
    best_epoch: int
    best_val_loss: float
    aborted: bool = False
    message: str = ""


def _check_frames(frames: Sequence[Frame], name: str) -> None:
    for f in frames:
        if f.energy is None or f.forces is None:
            raise ValueError(f"{name} set contains unlabeled frames")


def _prepare(model: PotentialModel, frames: Sequence[Frame]) -> list[dict]:
    prepared = []
    for f in frames:
        b = model.make_batch([f.structure])
        prepared.append({
            "batch": b,
            "energy": torch.tensor([f.energy], dtype=DTYPE),
            "forces": torch.tensor(np.asarray(f.forces), dtype=DTYPE),
        })
    return prepared


def _concat(items: list[dict]) -> tuple[Batch, torch.Tensor, torch.Tensor]:
    offset = 0
    pos, zi, mol, ei, ej, counts = [], [], [], [], [], []
    for m, item in enumerate(items):
        b: Batch = item["batch"]
        pos.append(b.positions)
        zi.append(b.z_index)
        mol.append(torch.full((b.positions.shape[0],), m, dtype=torch.long))
        ei.append(b.edge_i + offset)
        ej.append(b.edge_j + offset)
        counts.extend(b.atom_counts)
        offset += b.positions.shape[0]
    batch = Batch(
        positions=torch.cat(pos),
        z_index=torch.cat(zi),
        mol_index=torch.cat(mol),
        edge_i=torch.cat(ei),
        edge_j=torch.cat(ej),
        n_molecules=len(items),
        atom_counts=tuple(counts),
    )
    energies = torch.cat([item["energy"] for item in items])
    forces = torch.cat([item["forces"] for item in items])
    return batch, energies, forces


def _losses(model: PotentialModel, batch: Batch, ref_e: torch.Tensor,
            ref_f: torch.Tensor, cfg: TrainConfig, create_graph: bool
            ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    if cfg.w_forces == 0.0:
        # force labels cannot influence the loss or its gradient
        pred_e = model.batch_energies(batch)
        pred_f = None
    else:
        pred_e, pred_f = model.batch_energies_forces(
            batch, create_graph=create_graph
        )
    de = pred_e - ref_e
    df = (pred_f - ref_f) if pred_f is not None \
        else torch.zeros_like(ref_f)
    if cfg.normalize_energy_residuals:
        de = de / model.scaler.scale
        df = df / model.scaler.scale
    mse_e = (de * de).mean()
    loss = cfg.w_energy * mse_e
    if cfg.w_forces != 0.0:
        loss = loss + cfg.w_forces * (df * df).mean()
    return loss, de.detach(), df.detach()


def _evaluate_split(model: PotentialModel, prepared: list[dict],
                    cfg: TrainConfig, batch_size: int) -> dict:
    total_loss = 0.0
    abs_e: list[float] = []
    abs_f: list[np.ndarray] = []
    n_batches = 0
    for lo in range(0, len(prepared), batch_size):
        batch, ref_e, ref_f = _concat(prepared[lo:lo + batch_size])
        pred_e, pred_f = model.batch_energies_forces(batch)
        de = (pred_e - ref_e).detach()
        df = (pred_f - ref_f).detach()
        scale = model.scaler.scale if cfg.normalize_energy_residuals else 1.0
        loss = cfg.w_energy * float(((de / scale) ** 2).mean()) \
            + cfg.w_forces * float(((df / scale) ** 2).mean())
        total_loss += loss
        abs_e.extend(np.abs(de.numpy()).tolist())
        abs_f.append(np.abs(df.numpy()).ravel())
        n_batches += 1
    return {
        "loss": total_loss / max(n_batches, 1),
        "energy_mae": float(np.mean(abs_e)) if abs_e else 0.0,
        "force_mae": float(np.mean(np.concatenate(abs_f))) if abs_f else 0.0,
    }


def train(model: PotentialModel, train_frames: Sequence[Frame],
          val_frames: Sequence[Frame], cfg: TrainConfig,
          rng: Optional[RngStream] = None) -> TrainResult:
    """Minimize w_E * MSE(E) + w_F * MSE(F); returns the best-validation
    parameters. Deterministic for a fixed seed in single-threaded mode.

    A non-finite loss aborts training: the model is restored to the best
    finite checkpoint and the result carries the diagnostic.
    """
    if not train_frames:
        raise ValueError("empty training set")
    _check_frames(train_frames, "train")
    _check_frames(val_frames, "validation")
    if cfg.deterministic:
        torch.set_num_threads(1)
    rng = rng or RngStream(cfg.seed, "train")
    torch.manual_seed(cfg.seed)

    prepared_train = _prepare(model, train_frames)
    prepared_val = _prepare(model, val_frames)

    optimizer = torch.optim.Adam(
        model.parameters(), lr=cfg.lr_init,
        betas=(cfg.beta1, cfg.beta2), eps=cfg.eps,
    )
    history: list[dict] = []
    best_state = copy.deepcopy(model.state_dict())
    best_val = math.inf
    best_epoch = -1
    since_best = 0

    order = np.arange(len(prepared_train))
    for epoch in range(cfg.max_epochs):
        rng.shuffle(order)
        batches = [
            [prepared_train[i] for i in order[lo:lo + cfg.batch_size]]
            for lo in range(0, len(order), cfg.batch_size)
        ]
        epoch_lr = lr_for_epoch(cfg, epoch)
        running = 0.0
        for step, items in enumerate(batches):
            if epoch == 0:
                lr = cfg.lr_init * (step + 1) / len(batches)
            else:
                lr = epoch_lr
            for group in optimizer.param_groups:
                group["lr"] = lr
            batch, ref_e, ref_f = _concat(items)
            optimizer.zero_grad(set_to_none=True)
            loss, _, _ = _losses(model, batch, ref_e, ref_f, cfg,
                                 create_graph=True)
            if not torch.isfinite(loss):
                model.load_state_dict(best_state)
                return TrainResult(
                    model, history, best_epoch, best_val, aborted=True,
                    message=f"non-finite loss at epoch {epoch}, step {step}",
                )
            loss.backward()
            optimizer.step()
            running += float(loss.detach())

        val = _evaluate_split(model, prepared_val, cfg, cfg.batch_size) \
            if prepared_val else {"loss": float("nan"),
                                  "energy_mae": float("nan"),
                                  "force_mae": float("nan")}
        entry = {
            "epoch": epoch,
            "lr": epoch_lr if epoch > 0 else cfg.lr_init,
            "train_loss": running / max(len(batches), 1),
            "val_loss": val["loss"],
            "val_energy_mae": val["energy_mae"],
            "val_force_mae": val["force_mae"],
        }
        history.append(entry)

        improved = prepared_val and val["loss"] < best_val
        if improved or not prepared_val:
            best_val = val["loss"] if prepared_val else entry["train_loss"]
            best_state = copy.deepcopy(model.state_dict())
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if cfg.patience is not None and since_best > cfg.patience:
                break

    model.load_state_dict(best_state)
    return TrainResult(model, history, best_epoch, best_val)
