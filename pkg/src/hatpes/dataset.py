"""On-disk dataset access: manifest + extended-XYZ frame files.

A generated dataset directory contains ``manifest.jsonl`` plus one or more
frame files (``dataset.xyz`` for single configurations, ``interp.xyz`` for
12-frame interpolation blocks). Records locate their frames by file name,
start index, and count.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Optional, Union

from .core.xyz import Frame, read_frames
from .hatbuild.manifest import SystemRecord, read_manifest

MANIFEST_NAME = "manifest.jsonl"
SINGLE_FRAMES = "dataset.xyz"
INTERP_FRAMES = "interp.xyz"


class DatasetStore:
    """Read-side view of a dataset directory with per-file frame caching."""

    def __init__(self, root: Union[str, os.PathLike]):
        self.root = Path(root)
        self._frames: dict[str, list[Frame]] = {}

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def records(self) -> list[SystemRecord]:
        return read_manifest(self.manifest_path)

    def _file_frames(self, name: str) -> list[Frame]:
        if name not in self._frames:
            self._frames[name] = read_frames(self.root / name)
        return self._frames[name]

    def frames_for(self, record: SystemRecord) -> list[Frame]:
        frames = self._file_frames(record.frame_file)
        chunk = frames[record.frame_start:record.frame_start + record.frame_count]
        if len(chunk) != record.frame_count:
            raise ValueError(
                f"record {record.system_id}: frame range out of bounds in "
                f"{record.frame_file}"
            )
        return chunk

    def labeled_frames(self, records: Iterable[SystemRecord]) -> list[Frame]:
        """Flat frame list for the given records, in record order."""
        out: list[Frame] = []
        for rec in records:
            out.extend(self.frames_for(rec))
        return out


def select_records(records: Iterable[SystemRecord],
                   kind: Optional[str] = None,
                   split: Optional[str] = None,
                   max_atoms: Optional[int] = None) -> list[SystemRecord]:
    out = []
    for rec in records:
        if kind is not None and rec.kind != kind:
            continue
        if split is not None and rec.split != split:
            continue
        if max_atoms is not None and rec.n_atoms > max_atoms:
            continue
        out.append(rec)
    return out
