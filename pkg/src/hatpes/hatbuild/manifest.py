"""Dataset manifest: one JSON-lines record per generated system.

The manifest is the join point between generation, splitting, training and
evaluation: it records provenance (templates, stratum, reactive indices),
where each system's frames live in the structure files, the split
assignment, and reference barriers for interpolation systems.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Union


@dataclass
class SystemRecord:
    system_id: str
    kind: str                 # "single" | "interp"
    hat_type: str             # "intra" | "inter"
    system_class: str         # stratum label, e.g. "inter:aminoacid+dipeptide"
    molecule_ids: tuple[str, ...]
    conformer_id: int         # reserved for external conformer sets; 0 here
    h_index: int
    donor_index: int
    acceptor_index: int
    n_atoms: int
    frame_file: str
    frame_start: int
    frame_count: int
    split: Optional[str] = None
    barrier_left_ev: Optional[float] = None
    barrier_right_ev: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("single", "interp"):
            raise ValueError(f"unknown record kind {self.kind!r}")
        self.molecule_ids = tuple(self.molecule_ids)

    def to_json(self) -> str:
        payload = dataclasses.asdict(self)
        payload["molecule_ids"] = list(self.molecule_ids)
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SystemRecord":
        payload = json.loads(line)
        payload["molecule_ids"] = tuple(payload["molecule_ids"])
        return cls(**payload)


def write_manifest(path: Union[str, os.PathLike],
                   records: Iterable[SystemRecord]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def read_manifest(path: Union[str, os.PathLike]) -> list[SystemRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(SystemRecord.from_json(line))
            except (json.JSONDecodeError, TypeError, KeyError) as exc:
                raise ValueError(f"manifest line {lineno}: {exc}") from None
    return records
