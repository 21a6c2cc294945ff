"""Packaged library of small peptide-like 3D structure templates.

Each template is an analog fragment (amino-acid-like or dipeptide-like,
capped or uncapped) stored as extended-XYZ with an explicit bond table and
an ``eligible_h`` annotation listing hydrogens that may be removed or
transferred. Every packaged geometry is relaxed to a true minimum of the
default surrogate potential, so normal-mode analysis succeeds on load.

Real structures can be injected through the same extended-XYZ interface
instead of the packaged set.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from ..core.rng import RngStream
from ..core.structure import Structure, neighbor_indices
from ..core.xyz import read_frames

MOL_CLASSES = ("aminoacid", "dipeptide")
CAPPINGS = ("capped", "uncapped")
VALID_FILTER_TAGS = set(MOL_CLASSES) | set(CAPPINGS)


@dataclass(frozen=True)
class Template:
    name: str
    structure: Structure
    mol_class: str
    capping: str
    eligible_h: tuple[int, ...]

    def __post_init__(self):
        if self.mol_class not in MOL_CLASSES:
            raise ValueError(f"unknown molecule class {self.mol_class!r}")
        if self.capping not in CAPPINGS:
            raise ValueError(f"unknown capping tag {self.capping!r}")
        s = self.structure
        if s.bonds is None:
            raise ValueError("templates require an explicit bond table")
        for h in self.eligible_h:
            if s.elements[h] != 1:
                raise ValueError(f"eligible_h index {h} is not a hydrogen")
            if len(neighbor_indices(s.bonds, h)) != 1:
                raise ValueError(
                    f"eligible hydrogen {h} must have exactly one bonded heavy atom"
                )

    @property
    def tags(self) -> tuple[str, str]:
        return (self.mol_class, self.capping)


def template_from_structure(s: Structure) -> Template:
    tags = s.tags
    try:
        name = tags["template"]
        mol_class = tags["template_class"]
        capping = tags["capping"]
        eligible = tuple(int(i) for i in tags["eligible_h"].split(",") if i)
    except KeyError as exc:
        raise ValueError(f"template file missing tag {exc}") from None
    return Template(name, s, mol_class, capping, eligible)


def _load_library() -> tuple[Template, ...]:
    templates = []
    data_dir = resources.files(__package__) / "data"
    for entry in sorted(data_dir.iterdir(), key=lambda p: p.name):
        if not entry.name.endswith(".xyz"):
            continue
        with resources.as_file(entry) as path:
            for frame in read_frames(path):
                templates.append(template_from_structure(frame.structure))
    return tuple(sorted(templates, key=lambda t: t.name))


_LIBRARY: Optional[tuple[Template, ...]] = None


def load_library() -> tuple[Template, ...]:
    global _LIBRARY
    if _LIBRARY is None:
        _LIBRARY = _load_library()
    return _LIBRARY


def list_templates(filter_tags: Iterable[str] = ()) -> list[Template]:
    """Templates carrying every requested tag, ordered by name."""
    wanted = list(filter_tags)
    for tag in wanted:
        if tag not in VALID_FILTER_TAGS:
            raise ValueError(
                f"unknown template tag {tag!r}; valid tags: "
                f"{sorted(VALID_FILTER_TAGS)}"
            )
    return [t for t in load_library() if all(tag in t.tags for tag in wanted)]


class PairDraw(NamedTuple):
    donor: Template
    acceptor: Template
    hat_type: str       # "intra" | "inter"
    system_class: str   # stratum label, e.g. "inter:aminoacid+dipeptide"


_INTRA_CLASSES = tuple(f"intra:{c}" for c in MOL_CLASSES)
_INTER_CLASSES = (
    "inter:aminoacid+aminoacid",
    "inter:aminoacid+dipeptide",
    "inter:dipeptide+dipeptide",
)
ALL_SYSTEM_CLASSES = _INTRA_CLASSES + _INTER_CLASSES


def default_mixing_policy() -> dict[str, float]:
    w = 1.0 / len(ALL_SYSTEM_CLASSES)
    return {c: w for c in ALL_SYSTEM_CLASSES}


def _expand_policy(policy: dict[str, float]) -> dict[str, float]:
    expanded: dict[str, float] = {}
    for key, weight in policy.items():
        if key in ALL_SYSTEM_CLASSES:
            members = (key,)
        elif key == "intra":
            members = _INTRA_CLASSES
        elif key == "inter":
            members = _INTER_CLASSES
        else:
            raise ValueError(f"unknown system class {key!r}")
        for m in members:
            expanded[m] = expanded.get(m, 0.0) + weight / len(members)
    total = sum(expanded.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"mixing policy weights sum to {total}, expected 1")
    return expanded


def pair_sampler(rng: RngStream,
                 policy: Optional[dict[str, float]] = None,
                 templates: Optional[Sequence[Template]] = None) -> PairDraw:
    """Draw a system class per the mixing policy, then uniform templates."""
    expanded = _expand_policy(policy if policy is not None
                              else default_mixing_policy())
    pool = list(templates) if templates is not None else list(load_library())
    by_class = {c: [t for t in pool if t.mol_class == c] for c in MOL_CLASSES}
    labels = sorted(expanded)
    weights = np.array([expanded[c] for c in labels])
    label = labels[int(rng.choice(len(labels), p=weights / weights.sum()))]
    kind, _, spec = label.partition(":")
    if kind == "intra":
        candidates = by_class[spec]
        if not candidates:
            raise ValueError(f"no templates available for class {spec!r}")
        t = candidates[int(rng.integers(0, len(candidates)))]
        return PairDraw(t, t, "intra", label)
    class_a, class_b = spec.split("+")
    pool_a, pool_b = by_class[class_a], by_class[class_b]
    if not pool_a or not pool_b:
        raise ValueError(f"no templates available for class pair {spec!r}")
    donor = pool_a[int(rng.integers(0, len(pool_a)))]
    acceptor = pool_b[int(rng.integers(0, len(pool_b)))]
    if rng.uniform() < 0.5:
        donor, acceptor = acceptor, donor
    return PairDraw(donor, acceptor, "inter", label)
