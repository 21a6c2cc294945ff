"""Calculator abstraction shared by the surrogate and external backends."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence, Union

import numpy as np

from ..core.structure import Structure


@dataclass(frozen=True)
class CalcResult:
    """Energy (eV) and forces (eV/A) for one structure.

    ``converged=False`` marks a failed evaluation; callers decide whether to
    retry or skip. ``provenance`` identifies the calculator and its parameter
    hash so labels from different theory levels stay distinguishable.
    """

    energy: float
    forces: np.ndarray
    converged: bool = True
    provenance: str = ""
    message: str = ""

    def __post_init__(self):
        f = np.array(self.forces, dtype=np.float64)
        f.setflags(write=False)
        object.__setattr__(self, "forces", f)
        if self.converged:
            if not np.isfinite(self.energy) or not np.all(np.isfinite(f)):
                raise ValueError("converged result contains non-finite values")


def failed_result(n_atoms: int, provenance: str, message: str) -> CalcResult:
    return CalcResult(
        energy=float("nan"),
        forces=np.full((n_atoms, 3), float("nan")),
        converged=False,
        provenance=provenance,
        message=message,
    )


class Calculator(Protocol):
    provenance: str

    def evaluate(self, s: Structure, donor_h: Optional[int] = None,
                 acceptor: Optional[int] = None) -> CalcResult:
        ...


IndexSpec = Union[None, int, Sequence[Optional[int]]]


def _index_for(spec: IndexSpec, i: int) -> Optional[int]:
    if spec is None or isinstance(spec, int):
        return spec
    return spec[i]


def batch_evaluate(structures: Sequence[Structure], calculator: Calculator,
                   worker_count: int = 1, donor_h: IndexSpec = None,
                   acceptor: IndexSpec = None) -> list[CalcResult]:
    """Evaluate many structures, preserving input order.

    Failed evaluations are carried through as ``converged=False`` results,
    never dropped. ``donor_h``/``acceptor`` may be a single index applied to
    all structures or one (possibly None) entry per structure.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    tasks = [
        (s, _index_for(donor_h, i), _index_for(acceptor, i))
        for i, s in enumerate(structures)
    ]
    if worker_count == 1 or len(tasks) <= 1:
        return [calculator.evaluate(s, h, a) for s, h, a in tasks]
    with ThreadPoolExecutor(max_workers=worker_count) as pool:
        futs = [pool.submit(calculator.evaluate, s, h, a) for s, h, a in tasks]
        return [f.result() for f in futs]
