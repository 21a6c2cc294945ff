"""External calculator driven through files and a subprocess.

The configured command template receives ``{input}`` and ``{output}`` path
placeholders. The input is an extended-XYZ file; the command must write a
result JSON::

    {"energy_ev": float, "forces_ev_per_ang": [[fx, fy, fz], ...],
     "converged": bool}

Successful results are cached under ``cache/<hash[0:2]>/<hash>.json`` keyed
by a 256-bit hash of the canonicalized structure and the command template,
so re-labeling runs skip already-computed points. Failures (nonzero exit,
timeout, unparsable output) are returned as ``converged=False`` results with
a diagnostic message and are not cached.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import shutil
import subprocess
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..core.structure import Structure
from ..core.xyz import Frame, write_frames
from .base import CalcResult, failed_result


@dataclass(frozen=True)
class ExternalCalcConfig:
    command_template: str
    scratch_dir: Union[str, os.PathLike]
    cache_dir: Optional[Union[str, os.PathLike]] = None
    timeout_s: float = 600.0

    def __post_init__(self):
        if "{input}" not in self.command_template or \
                "{output}" not in self.command_template:
            raise ValueError(
                "command template must contain {input} and {output} placeholders"
            )
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")


def structure_hash(s: Structure, donor_h: Optional[int], acceptor: Optional[int],
                   salt: str) -> str:
    h = hashlib.sha256()
    h.update(salt.encode())
    h.update(np.asarray(s.elements, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(s.positions, dtype=np.float64).tobytes())
    h.update(f"|q={s.charge}|m={s.multiplicity}"
             f"|h={donor_h}|a={acceptor}".encode())
    return h.hexdigest()


class ExternalCalculator:
    """Subprocess-backed calculator with a content-addressed result cache."""

    def __init__(self, config: ExternalCalcConfig):
        self.config = config
        self.provenance = "external:" + hashlib.sha256(
            config.command_template.encode()
        ).hexdigest()[:12]
        self.subprocess_calls = 0
        self._cache_lock = threading.Lock()
        Path(config.scratch_dir).mkdir(parents=True, exist_ok=True)
        if config.cache_dir is not None:
            Path(config.cache_dir).mkdir(parents=True, exist_ok=True)

    def _cache_path(self, key: str) -> Optional[Path]:
        if self.config.cache_dir is None:
            return None
        return Path(self.config.cache_dir) / key[:2] / f"{key}.json"

    def _result_from_payload(self, payload: dict, s: Structure) -> CalcResult:
        if not payload.get("converged", False):
            return failed_result(s.n_atoms, self.provenance,
                                 "calculator reported converged=false")
        energy = float(payload["energy_ev"])
        forces = np.asarray(payload["forces_ev_per_ang"], dtype=np.float64)
        if forces.shape != (s.n_atoms, 3):
            return failed_result(
                s.n_atoms, self.provenance,
                f"forces shape {forces.shape} does not match {s.n_atoms} atoms",
            )
        if not (np.isfinite(energy) and np.all(np.isfinite(forces))):
            return failed_result(s.n_atoms, self.provenance,
                                 "non-finite values in calculator output")
        return CalcResult(energy=energy, forces=forces, converged=True,
                          provenance=self.provenance)

    def evaluate(self, s: Structure, donor_h: Optional[int] = None,
                 acceptor: Optional[int] = None) -> CalcResult:
        key = structure_hash(s, donor_h, acceptor, self.config.command_template)
        cache_path = self._cache_path(key)
        if cache_path is not None and cache_path.exists():
            payload = json.loads(cache_path.read_text())
            return self._result_from_payload(payload, s)

        tags = {}
        if donor_h is not None:
            tags = {"hat_h_index": str(donor_h), "hat_acceptor_index": str(acceptor)}
        task_dir = Path(self.config.scratch_dir) / f"{key[:16]}-{uuid.uuid4().hex[:8]}"
        task_dir.mkdir(parents=True, exist_ok=True)
        input_path = task_dir / "input.xyz"
        output_path = task_dir / "result.json"
        write_frames(input_path, [Frame(s.with_tags(**tags))])

        cmd = self.config.command_template.format(
            input=str(input_path), output=str(output_path)
        )
        self.subprocess_calls += 1
        try:
            proc = subprocess.run(
                shlex.split(cmd), capture_output=True, text=True,
                timeout=self.config.timeout_s,
            )
        except subprocess.TimeoutExpired:
            shutil.rmtree(task_dir, ignore_errors=True)
            return failed_result(
                s.n_atoms, self.provenance,
                f"timeout after {self.config.timeout_s} s",
            )
        except OSError as exc:
            shutil.rmtree(task_dir, ignore_errors=True)
            return failed_result(s.n_atoms, self.provenance,
                                 f"failed to launch command: {exc}")

        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip()[-500:]
            shutil.rmtree(task_dir, ignore_errors=True)
            return failed_result(
                s.n_atoms, self.provenance,
                f"exit code {proc.returncode}: {tail}",
            )
        try:
            payload = json.loads(output_path.read_text())
            result = self._result_from_payload(payload, s)
        except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            shutil.rmtree(task_dir, ignore_errors=True)
            return failed_result(s.n_atoms, self.provenance,
                                 f"unparsable output: {exc}")

        if result.converged and cache_path is not None:
            with self._cache_lock:
                cache_path.parent.mkdir(parents=True, exist_ok=True)
                tmp = cache_path.with_suffix(f".tmp-{uuid.uuid4().hex[:8]}")
                tmp.write_text(json.dumps(payload))
                os.replace(tmp, cache_path)
        shutil.rmtree(task_dir, ignore_errors=True)
        return result
