import json
import stat
import sys
import textwrap

import numpy as np
import pytest

from hatpes.calculators import ExternalCalcConfig, ExternalCalculator
from hatpes.core import Structure


def write_mock_engine(tmp_path, body):
    script = tmp_path / "engine.py"
    script.write_text(textwrap.dedent(body))
    return f"{sys.executable} {script}"


ECHO_ENGINE = """
    import json, sys
    inp, out = sys.argv[1], sys.argv[2]
    n = int(open(inp).readline())
    payload = {
        "energy_ev": -7.25,
        "forces_ev_per_ang": [[0.1, 0.0, -0.1]] * n,
        "converged": True,
    }
    json.dump(payload, open(out, "w"))
"""

FAILING_ENGINE = """
    import sys
    sys.stderr.write("scf blew up\\n")
    sys.exit(1)
"""

GARBAGE_ENGINE = """
    import sys
    open(sys.argv[2], "w").write("not json at all")
"""


@pytest.fixture
def water():
    return Structure((8, 1, 1), [[0, 0, 0], [0.96, 0, 0], [-0.24, 0.93, 0]])


def make_calc(tmp_path, body, cache=True):
    cmd = write_mock_engine(tmp_path, body) + " {input} {output}"
    cfg = ExternalCalcConfig(
        command_template=cmd,
        scratch_dir=tmp_path / "scratch",
        cache_dir=(tmp_path / "cache") if cache else None,
        timeout_s=30,
    )
    return ExternalCalculator(cfg)


def test_mock_roundtrip(tmp_path, water):
    calc = make_calc(tmp_path, ECHO_ENGINE)
    res = calc.evaluate(water)
    assert res.converged
    assert res.energy == -7.25
    assert res.forces.shape == (3, 3)
    assert np.allclose(res.forces[0], [0.1, 0.0, -0.1])


def test_cache_hit_skips_subprocess(tmp_path, water):
    calc = make_calc(tmp_path, ECHO_ENGINE)
    calc.evaluate(water)
    assert calc.subprocess_calls == 1
    res = calc.evaluate(water)
    assert res.converged
    assert calc.subprocess_calls == 1  # served from cache
    # a different geometry is a different key
    moved = water.with_positions(water.positions + 0.01)
    calc.evaluate(moved)
    assert calc.subprocess_calls == 2


def test_cache_layout(tmp_path, water):
    calc = make_calc(tmp_path, ECHO_ENGINE)
    calc.evaluate(water)
    entries = list((tmp_path / "cache").glob("*/*.json"))
    assert len(entries) == 1
    assert entries[0].parent.name == entries[0].name[:2]
    assert len(entries[0].stem) == 64  # 256-bit hex digest


def test_nonzero_exit_marks_unconverged(tmp_path, water):
    calc = make_calc(tmp_path, FAILING_ENGINE)
    res = calc.evaluate(water)
    assert not res.converged
    assert "exit code 1" in res.message
    assert "scf blew up" in res.message
    # failures are not cached; a retry launches the command again
    calc.evaluate(water)
    assert calc.subprocess_calls == 2


def test_unparsable_output_marks_unconverged(tmp_path, water):
    calc = make_calc(tmp_path, GARBAGE_ENGINE)
    res = calc.evaluate(water)
    assert not res.converged
    assert "unparsable" in res.message


def test_hat_indices_written_to_input(tmp_path, water):
    body = """
        import json, sys
        text = open(sys.argv[1]).read()
        ok = "hat_h_index=1" in text and "hat_acceptor_index=0" in text
        json.dump({"energy_ev": 1.0 if ok else -1.0,
                   "forces_ev_per_ang": [[0,0,0]]*3,
                   "converged": True}, open(sys.argv[2], "w"))
    """
    calc = make_calc(tmp_path, body, cache=False)
    res = calc.evaluate(water, donor_h=1, acceptor=0)
    assert res.energy == 1.0


def test_command_template_validation(tmp_path):
    with pytest.raises(ValueError, match="placeholders"):
        ExternalCalcConfig(command_template="engine", scratch_dir=tmp_path)
