"""Evaluation harnesses: barrier prediction, learning curves, and
system-size transferability."""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..core.rng import RngStream
from ..core.units import EV_TO_MEV
from ..core.xyz import Frame
from ..dataset import DatasetStore, select_records
from ..hatbuild.interpolate import barriers_from_energies
from ..hatbuild.manifest import SystemRecord
from ..mlp.model import PotentialModel
from ..mlp.model import predict_batch as _predict
from .metrics import MetricsReport, compute_metrics


@dataclass(frozen=True)
class BarrierRow:
    system_id: str
    system_class: str
    n_atoms: int
    ref_left_ev: float
    ref_right_ev: float
    pred_left_ev: float
    pred_right_ev: float
    frame_energy_mae_mev: float

    @property
    def abs_errors_ev(self) -> tuple[float, float]:
        return (abs(self.pred_left_ev - self.ref_left_ev),
                abs(self.pred_right_ev - self.ref_right_ev))


@dataclass(frozen=True)
class BarrierReport:
    rows: tuple[BarrierRow, ...]
    barrier_mae_mev: float
    n_skipped_invalid: int

    def per_stratum_mae_mev(self) -> dict[str, float]:
        groups: dict[str, list[float]] = {}
        for row in self.rows:
            groups.setdefault(row.system_class, []).extend(row.abs_errors_ev)
        return {k: float(np.mean(v)) * EV_TO_MEV for k, v in groups.items()}


def evaluate_barriers(model: PotentialModel, records: Sequence[SystemRecord],
                      store: DatasetStore, batch_size: int = 32
                      ) -> BarrierReport:
    """Predict all 12 frame energies per interpolation system and recompute
    barriers with the max-minus-endpoint rule.

    The barrier MAE averages the left and right absolute errors of every
    valid system. Systems whose reference barriers are missing (unconverged
    labels at generation time) are skipped and counted.
    """
    rows = []
    skipped = 0
    for rec in records:
        if rec.kind != "interp":
            continue
        if rec.barrier_left_ev is None or rec.barrier_right_ev is None or \
                not (math.isfinite(rec.barrier_left_ev)
                     and math.isfinite(rec.barrier_right_ev)):
            skipped += 1
            continue
        frames = store.frames_for(rec)
        preds = _predict(model, [f.structure for f in frames], batch_size)
        pred_energies = [e for e, _ in preds]
        pred_left, pred_right = barriers_from_energies(pred_energies)
        frame_err = float(np.mean([
            abs(e - f.energy) for (e, _), f in zip(preds, frames)
        ])) * EV_TO_MEV
        rows.append(BarrierRow(
            system_id=rec.system_id,
            system_class=rec.system_class,
            n_atoms=rec.n_atoms,
            ref_left_ev=rec.barrier_left_ev,
            ref_right_ev=rec.barrier_right_ev,
            pred_left_ev=pred_left,
            pred_right_ev=pred_right,
            frame_energy_mae_mev=frame_err,
        ))
    if rows:
        errors = [e for row in rows for e in row.abs_errors_ev]
        mae = float(np.mean(errors)) * EV_TO_MEV
    else:
        mae = float("nan")
    return BarrierReport(tuple(rows), mae, skipped)


def write_barriers_csv(path: Union[str, os.PathLike],
                       report: BarrierReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["system_id", "ref_left_ev", "ref_right_ev",
                         "pred_left_ev", "pred_right_ev"])
        for row in report.rows:
            writer.writerow([
                row.system_id,
                f"{row.ref_left_ev:.9f}", f"{row.ref_right_ev:.9f}",
                f"{row.pred_left_ev:.9f}", f"{row.pred_right_ev:.9f}",
            ])


def evaluate_on_records(model: PotentialModel, store: DatasetStore,
                        single_records: Sequence[SystemRecord],
                        interp_records: Sequence[SystemRecord] = (),
                        batch_size: int = 32) -> MetricsReport:
    """Energy/force metrics over single configurations plus, when
    interpolation records are given, the barrier MAE."""
    frames = store.labeled_frames(single_records)
    preds = _predict(model, [f.structure for f in frames], batch_size)
    report = compute_metrics(preds, frames, single_records)
    if interp_records:
        barrier = evaluate_barriers(model, interp_records, store, batch_size)
        report = dataclasses.replace(
            report,
            barrier_mae_mev=barrier.barrier_mae_mev,
            n_barrier_systems=len(barrier.rows),
        )
    return report


# ---------------------------------------------------------- learning curve


@dataclass(frozen=True)
class CurvePoint:
    size: int
    energy_mae_mev: float
    force_mae_mev_ang: float
    barrier_mae_mev: float
    train_seconds: float


TrainerFn = Callable[[list[Frame], int], PotentialModel]
# trainer(train_frames, size) -> trained model


def nested_subset_records(records: Sequence[SystemRecord], sizes: Sequence[int],
                          seed: int) -> dict[int, list[SystemRecord]]:
    """One shuffle per seed; each smaller subset is a prefix of the larger."""
    order = np.arange(len(records))
    RngStream(seed, "learning-curve").shuffle(order)
    out = {}
    for size in sizes:
        if size > len(records):
            raise ValueError(
                f"requested subset of {size} from {len(records)} records"
            )
        out[size] = [records[i] for i in order[:size]]
    return out


def learning_curve(store: DatasetStore, records: Sequence[SystemRecord],
                   sizes: Sequence[int], trainer: TrainerFn, seed: int,
                   test_single: Sequence[SystemRecord],
                   test_interp: Sequence[SystemRecord] = ()
                   ) -> list[CurvePoint]:
    """Train one model per subset size, evaluate on the fixed test split,
    and account wall-clock training time per size."""
    train_pool = select_records(records, kind="single", split="train")
    subsets = nested_subset_records(train_pool, sorted(sizes), seed)
    points = []
    for size in sorted(sizes):
        frames = store.labeled_frames(subsets[size])
        t0 = time.perf_counter()
        model = trainer(frames, size)
        seconds = time.perf_counter() - t0
        report = evaluate_on_records(model, store, test_single, test_interp)
        points.append(CurvePoint(
            size=size,
            energy_mae_mev=report.energy_mae_mev,
            force_mae_mev_ang=report.force_mae_mev_ang,
            barrier_mae_mev=(report.barrier_mae_mev
                             if report.barrier_mae_mev is not None
                             else float("nan")),
            train_seconds=seconds,
        ))
    return points


def write_learning_curve_csv(path: Union[str, os.PathLike],
                             points: Sequence[CurvePoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "energy_mae_mev", "force_mae_mev_ang",
                         "barrier_mae_mev", "train_seconds"])
        for p in points:
            writer.writerow([p.size, f"{p.energy_mae_mev:.4f}",
                             f"{p.force_mae_mev_ang:.4f}",
                             f"{p.barrier_mae_mev:.4f}",
                             f"{p.train_seconds:.3f}"])


# ---------------------------------------------------------- transferability


@dataclass(frozen=True)
class SizeBucket:
    lo: int          # exclusive lower atom-count bound
    hi: int          # inclusive upper bound; -1 means unbounded
    label: str
    report: MetricsReport


def _bucket_records(records: Sequence[SystemRecord], lo: int, hi: int
                    ) -> list[SystemRecord]:
    return [r for r in records
            if r.n_atoms > lo and (hi < 0 or r.n_atoms <= hi)]


def transferability_eval(model: PotentialModel, store: DatasetStore,
                         test_single: Sequence[SystemRecord],
                         test_interp: Sequence[SystemRecord] = (),
                         threshold: int = 50, sub_bucket_width: int = 10
                         ) -> tuple[list[SizeBucket], list[str]]:
    """Size-bucketed metrics: the two main buckets (at or below the
    threshold, above it; a system with exactly `threshold` atoms counts as
    small) plus fixed-width sub-buckets. Empty buckets are omitted and
    reported in the notes list."""
    buckets: list[SizeBucket] = []
    notes: list[str] = []

    def add_bucket(lo, hi, label):
        recs = _bucket_records(test_single, lo, hi)
        interp = _bucket_records(list(test_interp), lo, hi)
        if not recs:
            notes.append(f"bucket {label} is empty; omitted")
            return
        report = evaluate_on_records(model, store, recs, interp)
        buckets.append(SizeBucket(lo, hi, label, report))

    add_bucket(0, threshold, f"<={threshold}")
    add_bucket(threshold, -1, f">{threshold}")
    max_atoms = max((r.n_atoms for r in test_single), default=0)
    lo = 0
    while lo < max_atoms:
        hi = lo + sub_bucket_width
        add_bucket(lo, hi, f"{lo + 1}-{hi}")
        lo = hi
    return buckets, notes


def write_transferability_csv(path: Union[str, os.PathLike],
                              buckets: Sequence[SizeBucket]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket_lo", "bucket_hi", "label", "n_structures",
                         "energy_mae_mev", "energy_mae_per_atom_mev",
                         "force_mae_mev_ang", "barrier_mae_mev"])
        for b in buckets:
            barrier = b.report.barrier_mae_mev
            writer.writerow([
                b.lo, b.hi, b.label, b.report.n_structures,
                f"{b.report.energy_mae_mev:.4f}",
                f"{b.report.energy_mae_per_atom_mev:.4f}",
                f"{b.report.force_mae_mev_ang:.4f}",
                "" if barrier is None else f"{barrier:.4f}",
            ])
