"""End-to-end dataset generation: templates -> normal-mode sampling ->
radical systems -> reaction configurations / interpolation paths.

Every attempt derives its own RNG stream from (seed, stage, attempt index),
so results are reproducible regardless of how many attempts fail along the
way. Rejections are counted per filter and reported by the CLI.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calculators.base import Calculator
from .core.rng import RngStream
from .core.structure import Structure
from .core.xyz import Frame, write_frames
from .dataset import INTERP_FRAMES, MANIFEST_NAME, SINGLE_FRAMES
from .hatbuild.assemble import assemble_inter_system, build_intra_system
from .hatbuild.configs import reference_energy, sample_reaction_configuration
from .hatbuild.interpolate import linear_interpolation
from .hatbuild.manifest import SystemRecord, write_manifest
from .hatbuild.radicals import TransferPolicy, make_radical
from .hatbuild.types import RadicalSystem, ReactionConfiguration
from .nms import NormalModes, analyze_structure, nms_sample, optimize_geometry
from .templates import Template, list_templates, pair_sampler


@dataclass(frozen=True)
class GenerationSettings:
    seed: int = 0
    n_single: int = 100
    n_interp: int = 10
    template_filters: tuple[str, ...] = ()
    mixing_policy: Optional[dict[str, float]] = None
    nms_temperature: float = 300.0
    nms_max_bond_strain: float = 0.25
    max_energy_rise: float = 5.0
    max_atoms: Optional[int] = None
    nms_tries_per_molecule: int = 20
    attempt_budget_factor: int = 30


@dataclass
class GenerationResult:
    records: list[SystemRecord]
    single_frames: list[Frame]
    interp_frames: list[Frame]
    stats: Counter
    complete: bool


class _TemplateModes:
    """Relaxes each template once and caches its normal modes."""

    def __init__(self, calc: Calculator):
        self.calc = calc
        self._cache: dict[str, NormalModes] = {}

    def modes_for(self, template: Template) -> NormalModes:
        nm = self._cache.get(template.name)
        if nm is None:
            relaxed = optimize_geometry(template.structure, self.calc)
            nm = analyze_structure(relaxed, self.calc)
            self._cache[template.name] = nm
        return nm


def _nms_conformer(modes: NormalModes, rng: RngStream, calc: Calculator,
                   settings: GenerationSettings, stats: Counter
                   ) -> Optional[Structure]:
    for k in range(settings.nms_tries_per_molecule):
        outcome = nms_sample(
            modes, rng.child(f"nms/{k}"),
            temperature=settings.nms_temperature,
            max_bond_strain=settings.nms_max_bond_strain,
            max_energy_rise=settings.max_energy_rise,
            calc=calc,
        )
        if outcome.accepted:
            stats["nms_accepted"] += 1
            return outcome.structure
        stats[f"nms_rejected_{outcome.reason}"] += 1
    return None


def _build_system(draw, modes_cache: _TemplateModes, rng: RngStream,
                  calc: Calculator, settings: GenerationSettings,
                  policy: Optional[TransferPolicy], stats: Counter
                  ) -> Optional[RadicalSystem]:
    acceptor_conf = _nms_conformer(
        modes_cache.modes_for(draw.acceptor), rng.child("acceptor"),
        calc, settings, stats,
    )
    if acceptor_conf is None:
        stats["rejected_nms_budget"] += 1
        return None
    eligible = list(draw.acceptor.eligible_h)
    removal = eligible[int(rng.integers(0, len(eligible)))]
    radical = make_radical(acceptor_conf, removal)

    if draw.hat_type == "intra":
        system = build_intra_system(radical, rng.child("intra"), policy)
        if system is None:
            stats["rejected_pair_selection"] += 1
            return None
    else:
        donor_conf = _nms_conformer(
            modes_cache.modes_for(draw.donor), rng.child("donor"),
            calc, settings, stats,
        )
        if donor_conf is None:
            stats["rejected_nms_budget"] += 1
            return None
        system = assemble_inter_system(donor_conf, radical,
                                       rng.child("assemble"), policy)
        if system is None:
            stats["rejected_assembly"] += 1
            return None

    if settings.max_atoms is not None and \
            system.structure.n_atoms > settings.max_atoms:
        stats["rejected_max_atoms"] += 1
        return None
    return system


def _tagged_frame(cfg: ReactionConfiguration, system_id: str,
                  energy: float, forces: np.ndarray) -> Frame:
    structure = cfg.structure.with_tags(
        system_id=system_id,
        hat_type=cfg.system.hat_type,
        frame_role=cfg.frame_role,
    )
    return Frame(structure, energy, forces)


def generate_dataset(settings: GenerationSettings, calc: Calculator,
                     policy: Optional[TransferPolicy] = None
                     ) -> GenerationResult:
    """Generate single reaction configurations and interpolation paths."""
    templates = list_templates(settings.template_filters)
    if not templates:
        raise ValueError("template filter matched nothing")
    modes_cache = _TemplateModes(calc)
    root = RngStream(settings.seed, "generate")
    stats: Counter = Counter()
    records: list[SystemRecord] = []
    single_frames: list[Frame] = []
    interp_frames: list[Frame] = []

    budget = settings.attempt_budget_factor * max(settings.n_single, 1)
    attempt = 0
    while len(single_frames) < settings.n_single and attempt < budget:
        rng = root.child(f"single/{attempt}")
        attempt += 1
        stats["single_attempts"] += 1
        draw = pair_sampler(rng.child("pair"), settings.mixing_policy,
                            templates)
        system = _build_system(draw, modes_cache, rng, calc, settings,
                               policy, stats)
        if system is None:
            continue
        e_ref = reference_energy(system, calc)
        cfg = sample_reaction_configuration(
            system, rng.child("config"), calc=calc,
            max_energy_rise=settings.max_energy_rise, e_ref=e_ref,
        )
        if cfg is None:
            stats["rejected_configuration"] += 1
            continue
        res = calc.evaluate(cfg.structure, system.h_index,
                            system.acceptor_index)
        if not res.converged:
            stats["rejected_label_failure"] += 1
            continue
        system_id = f"sys-{len(single_frames):06d}"
        records.append(SystemRecord(
            system_id=system_id, kind="single", hat_type=system.hat_type,
            system_class=draw.system_class,
            molecule_ids=system.molecule_ids, conformer_id=0,
            h_index=system.h_index, donor_index=system.donor_index,
            acceptor_index=system.acceptor_index,
            n_atoms=system.structure.n_atoms,
            frame_file=SINGLE_FRAMES, frame_start=len(single_frames),
            frame_count=1,
        ))
        single_frames.append(_tagged_frame(cfg, system_id, res.energy,
                                           res.forces))
        stats["single_accepted"] += 1

    budget = settings.attempt_budget_factor * max(settings.n_interp, 1)
    attempt = 0
    n_interp_done = 0
    while n_interp_done < settings.n_interp and attempt < budget:
        rng = root.child(f"interp/{attempt}")
        attempt += 1
        stats["interp_attempts"] += 1
        draw = pair_sampler(rng.child("pair"), settings.mixing_policy,
                            templates)
        system = _build_system(draw, modes_cache, rng, calc, settings,
                               policy, stats)
        if system is None:
            continue
        path = linear_interpolation(system, calc)
        if not path.valid:
            stats["rejected_invalid_path"] += 1
            continue
        system_id = f"int-{n_interp_done:06d}"
        records.append(SystemRecord(
            system_id=system_id, kind="interp", hat_type=system.hat_type,
            system_class=draw.system_class,
            molecule_ids=system.molecule_ids, conformer_id=0,
            h_index=system.h_index, donor_index=system.donor_index,
            acceptor_index=system.acceptor_index,
            n_atoms=system.structure.n_atoms,
            frame_file=INTERP_FRAMES, frame_start=12 * n_interp_done,
            frame_count=12,
            barrier_left_ev=path.barrier_left,
            barrier_right_ev=path.barrier_right,
        ))
        for frame_cfg, energy, forces in zip(path.frames, path.energies,
                                             path.forces):
            interp_frames.append(
                _tagged_frame(frame_cfg, system_id, energy, forces)
            )
        n_interp_done += 1
        stats["interp_accepted"] += 1

    complete = (len(single_frames) >= settings.n_single
                and n_interp_done >= settings.n_interp)
    return GenerationResult(records, single_frames, interp_frames, stats,
                            complete)


def write_dataset(result: GenerationResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_frames(out / SINGLE_FRAMES, result.single_frames)
    if result.interp_frames:
        write_frames(out / INTERP_FRAMES, result.interp_frames)
    write_manifest(out / MANIFEST_NAME, result.records)
