"""Extended-XYZ reading and writing.

Frame layout::

    <atom count>
    key=value key=value ...
    Symbol x y z [fx fy fz]

Reserved comment-line keys: ``energy_ev`` (present when the frame is
labeled), ``charge``, ``multiplicity``, and ``bonds`` (semicolon-separated
``i-j`` index pairs). Every other key round-trips through ``Structure.tags``;
the generation pipeline uses ``system_id``, ``hat_type`` (intra|inter) and
``frame_role`` (start|end|interp|sampled). Values containing whitespace or
quotes are double-quoted with backslash escaping.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .structure import Structure
from .units import atomic_number_of, symbol_of

RESERVED_KEYS = ("energy_ev", "charge", "multiplicity", "bonds")


class XyzFormatError(ValueError):
    """Malformed extended-XYZ content; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Frame:
    """A structure with optional energy (eV) and per-atom forces (eV/A)."""

    structure: Structure
    energy: Optional[float] = None
    forces: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.forces is not None:
            f = np.array(self.forces, dtype=np.float64)
            if f.shape != (self.structure.n_atoms, 3):
                raise ValueError(
                    f"forces shape {f.shape} does not match "
                    f"{self.structure.n_atoms} atoms"
                )
            f.setflags(write=False)
            object.__setattr__(self, "forces", f)


def _quote(value: str) -> str:
    if any(ord(c) < 32 or ord(c) == 127 for c in value):
        raise ValueError(
            f"tag value {value!r} contains control characters, which the "
            "line-oriented format cannot represent"
        )
    if value == "" or any(c in value for c in ' \t"'):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return value


def _split_kv(line: str, lineno: int) -> dict[str, str]:
    out: dict[str, str] = {}
    i, n = 0, len(line)
    while i < n:
        while i < n and line[i].isspace():
            i += 1
        if i >= n:
            break
        eq = line.find("=", i)
        if eq < 0:
            raise XyzFormatError(f"expected key=value, got {line[i:]!r}", lineno)
        key = line[i:eq]
        if not key or any(c.isspace() for c in key):
            raise XyzFormatError(f"bad key {key!r}", lineno)
        i = eq + 1
        if i < n and line[i] == '"':
            i += 1
            buf = []
            while i < n:
                c = line[i]
                if c == "\\" and i + 1 < n:
                    buf.append(line[i + 1])
                    i += 2
                elif c == '"':
                    i += 1
                    break
                else:
                    buf.append(c)
                    i += 1
            else:
                raise XyzFormatError("unterminated quoted value", lineno)
            out[key] = "".join(buf)
        else:
            j = i
            while j < n and not line[j].isspace():
                j += 1
            out[key] = line[i:j]
            i = j
    return out


def _format_bonds(bonds: Sequence[tuple[int, int]]) -> str:
    return ";".join(f"{i}-{j}" for i, j in bonds)


def _parse_bonds(text: str, lineno: int) -> tuple[tuple[int, int], ...]:
    if not text:
        return ()
    pairs = []
    for item in text.split(";"):
        try:
            i, j = item.split("-")
            pairs.append((int(i), int(j)))
        except ValueError:
            raise XyzFormatError(f"bad bond entry {item!r}", lineno) from None
    return tuple(pairs)


def frame_to_lines(frame: Frame) -> list[str]:
    s = frame.structure
    kv = []
    if frame.energy is not None:
        kv.append(f"energy_ev={frame.energy!r}")
    kv.append(f"charge={s.charge}")
    kv.append(f"multiplicity={s.multiplicity}")
    if s.bonds is not None:
        kv.append(f"bonds={_format_bonds(s.bonds)}")
    for key in sorted(s.tags):
        if key in RESERVED_KEYS:
            raise ValueError(f"tag key {key!r} collides with a reserved key")
        kv.append(f"{key}={_quote(s.tags[key])}")
    lines = [str(s.n_atoms), " ".join(kv)]
    for a in range(s.n_atoms):
        x, y, z = s.positions[a]
        row = f"{symbol_of(s.elements[a])} {x:.12f} {y:.12f} {z:.12f}"
        if frame.forces is not None:
            fx, fy, fz = frame.forces[a]
            row += f" {fx:.12f} {fy:.12f} {fz:.12f}"
        lines.append(row)
    return lines


def write_frames(path: Union[str, os.PathLike], frames: Iterable[Frame]) -> None:
    with open(path, "w") as fh:
        for frame in frames:
            fh.write("\n".join(frame_to_lines(frame)))
            fh.write("\n")


def read_frames(path: Union[str, os.PathLike]) -> list[Frame]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    frames: list[Frame] = []
    ln = 0
    while ln < len(lines):
        if not lines[ln].strip():
            ln += 1
            continue
        header_line = ln + 1
        try:
            n_atoms = int(lines[ln].strip())
        except ValueError:
            raise XyzFormatError(
                f"expected atom count, got {lines[ln]!r}", header_line
            ) from None
        if n_atoms < 1:
            raise XyzFormatError("atom count must be >= 1", header_line)
        if ln + 1 >= len(lines):
            raise XyzFormatError("missing comment line", header_line + 1)
        kv = _split_kv(lines[ln + 1], header_line + 1)
        energy = None
        if "energy_ev" in kv:
            try:
                energy = float(kv.pop("energy_ev"))
            except ValueError:
                raise XyzFormatError("unparsable energy_ev", header_line + 1) from None
        charge = int(kv.pop("charge", "0"))
        multiplicity = int(kv.pop("multiplicity", "1"))
        bonds = None
        if "bonds" in kv:
            bonds = _parse_bonds(kv.pop("bonds"), header_line + 1)

        elements: list[int] = []
        coords = np.zeros((n_atoms, 3))
        forces: Optional[np.ndarray] = None
        for a in range(n_atoms):
            lineno = header_line + 2 + a
            if ln + 2 + a >= len(lines):
                raise XyzFormatError(
                    f"frame declares {n_atoms} atoms but file ends", lineno
                )
            cols = lines[ln + 2 + a].split()
            if len(cols) not in (4, 7):
                raise XyzFormatError(
                    f"expected 4 or 7 columns, got {len(cols)}", lineno
                )
            try:
                elements.append(atomic_number_of(cols[0]))
            except KeyError:
                raise XyzFormatError(f"unknown element {cols[0]!r}", lineno) from None
            try:
                coords[a] = [float(c) for c in cols[1:4]]
                if len(cols) == 7:
                    if forces is None:
                        forces = np.zeros((n_atoms, 3))
                    forces[a] = [float(c) for c in cols[4:7]]
                elif forces is not None:
                    raise XyzFormatError("inconsistent force columns", lineno)
            except ValueError:
                raise XyzFormatError("unparsable coordinate", lineno) from None
        structure = Structure(tuple(elements), coords, bonds,
                              charge, multiplicity, kv)
        frames.append(Frame(structure, energy, forces))
        ln += 2 + n_atoms
    return frames


def write_structure_file(path: Union[str, os.PathLike],
                         structures: Iterable[Structure]) -> None:
    write_frames(path, [Frame(s) for s in structures])


def read_structure_file(path: Union[str, os.PathLike]) -> list[Structure]:
    return [f.structure for f in read_frames(path)]
