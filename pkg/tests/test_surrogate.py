import numpy as np
import pytest
from conftest import finite_diff_forces, max_rel_force_error

from hatpes.calculators import (
    MissingPairParameters,
    SurrogatePotential,
    batch_evaluate,
    default_surrogate_params,
)
from hatpes.core import RngStream, Structure, rigid_transform


@pytest.fixture(scope="module")
def calc():
    return SurrogatePotential()


def methane_like():
    # tetrahedral CH4 at roughly the C-H Morse minimum
    r = 1.09
    t = r / np.sqrt(3)
    pos = np.array([
        [0.0, 0.0, 0.0],
        [t, t, t],
        [t, -t, -t],
        [-t, t, -t],
        [-t, -t, t],
    ])
    bonds = [(0, i) for i in range(1, 5)]
    return Structure((6, 1, 1, 1, 1), pos, bonds)


def hat_triple(d=3.0, x=1.1):
    # donor carbon, transferring hydrogen, acceptor carbon on a line
    pos = np.array([[0.0, 0.0, 0.0], [x, 0.0, 0.0], [d, 0.0, 0.0]])
    return Structure((6, 1, 6), pos, bonds=[(0, 1)], multiplicity=2)


def test_diatomic_at_morse_minimum(calc):
    d_e, r_e, _ = calc.params.morse_params(6, 1)
    s = Structure((6, 1), [[0, 0, 0], [r_e, 0, 0]], bonds=[(0, 1)])
    res = calc.evaluate(s)
    assert res.energy == pytest.approx(-d_e, abs=1e-12)
    assert np.max(np.abs(res.forces)) < 1e-10


def test_forces_match_finite_differences(calc):
    rng = RngStream(42, "surrogate-fd")
    base = methane_like()
    for _ in range(5):
        pos = base.positions + rng.normal(size=base.positions.shape) * 0.1
        s = base.with_positions(pos)
        res = calc.evaluate(s)
        fd = finite_diff_forces(lambda q: calc.evaluate(q).energy, s)
        assert max_rel_force_error(res.forces, fd) < 1e-6


def test_hat_forces_match_finite_differences(calc):
    rng = RngStream(43, "surrogate-hat-fd")
    for _ in range(5):
        x = 0.9 + rng.uniform() * 1.4
        s = hat_triple(x=x)
        pos = s.positions + rng.normal(size=(3, 3)) * 0.05
        s = s.with_positions(pos)
        res = calc.evaluate(s, donor_h=1, acceptor=2)
        fd = finite_diff_forces(
            lambda q: calc.evaluate(q, donor_h=1, acceptor=2).energy, s
        )
        assert max_rel_force_error(res.forces, fd) < 1e-6


def test_midpoint_symmetry(calc):
    d = 3.0
    s = hat_triple(d=d, x=d / 2)
    res = calc.evaluate(s, donor_h=1, acceptor=2)
    # forces on the two carbons mirror each other; H feels no net pull
    assert res.forces[0][0] == pytest.approx(-res.forces[2][0], abs=1e-10)
    assert abs(res.forces[1][0]) < 1e-10
    mirrored = s.with_positions(np.array([[d, 0, 0], [d / 2, 0, 0], [0, 0, 0]]))
    res_m = calc.evaluate(mirrored, donor_h=1, acceptor=2)
    assert res_m.energy == pytest.approx(res.energy, abs=1e-12)


def test_rigid_invariance_and_force_covariance(calc):
    rng = RngStream(44, "surrogate-sym")
    s = methane_like()
    ref = calc.evaluate(s)
    for _ in range(25):
        rot = rng.random_rotation()
        t = rng.normal(size=3) * 10
        s2 = rigid_transform(s, rot, t)
        res = calc.evaluate(s2)
        assert abs(res.energy - ref.energy) < 1e-9
        assert np.max(np.abs(res.forces - ref.forces @ rot.T)) < 1e-9


def test_net_force_vanishes(calc):
    rng = RngStream(45, "surrogate-net")
    s = methane_like()
    s = s.with_positions(s.positions + rng.normal(size=(5, 3)) * 0.15)
    res = calc.evaluate(s)
    assert np.linalg.norm(res.forces.sum(axis=0)) < 1e-9


def test_permutation_invariance(calc):
    s = methane_like()
    ref = calc.evaluate(s)
    # swap two hydrogens (atoms 1 and 2) and their bonds
    perm = [0, 2, 1, 3, 4]
    s2 = Structure(
        tuple(s.elements[p] for p in perm),
        s.positions[perm],
        bonds=[(0, 1), (0, 2), (0, 3), (0, 4)],
    )
    res = calc.evaluate(s2)
    assert res.energy == pytest.approx(ref.energy, abs=1e-12)
    assert np.max(np.abs(res.forces[perm] - ref.forces)) < 1e-12


def test_transfer_profile_has_two_wells_one_barrier(calc):
    d = 3.0
    xs = np.arange(0.4, d - 0.4 + 1e-9, 0.01)
    energies = []
    for x in xs:
        s = hat_triple(d=d, x=float(x))
        energies.append(calc.evaluate(s, donor_h=1, acceptor=2).energy)
    e = np.array(energies)
    interior_max = [
        i for i in range(1, len(e) - 1) if e[i] > e[i - 1] and e[i] > e[i + 1]
    ]
    interior_min = [
        i for i in range(1, len(e) - 1) if e[i] < e[i - 1] and e[i] < e[i + 1]
    ]
    assert len(interior_max) == 1
    assert len(interior_min) == 2


def test_missing_pair_parameters(calc):
    s = Structure((17, 1), [[0, 0, 0], [1.3, 0, 0]], bonds=[(0, 1)])
    with pytest.raises(MissingPairParameters, match="1, 17"):
        calc.evaluate(s)


def test_smooth_min_below_both_wells(calc):
    # coupling term never exceeds either single-sided Morse energy
    s = hat_triple(x=1.3)
    full = calc.evaluate(s, donor_h=1, acceptor=2).energy
    params = calc.params
    d_e, r_e, a = params.morse_params(1, 6)
    m_d = d_e * ((1 - np.exp(-a * (1.3 - r_e))) ** 2 - 1)
    m_a = d_e * ((1 - np.exp(-a * (1.7 - r_e))) ** 2 - 1)
    lj_cc = full - min(m_d, m_a)  # remaining parts: C-C LJ + coupling excess
    assert full <= min(m_d, m_a) + 0.1  # LJ between carbons is small at 3 A


def test_batch_evaluate_order_and_determinism(calc):
    rng = RngStream(46, "batch")
    structs = []
    base = methane_like()
    for _ in range(30):
        structs.append(
            base.with_positions(base.positions + rng.normal(size=(5, 3)) * 0.05)
        )
    serial = batch_evaluate(structs, calc, worker_count=1)
    parallel = batch_evaluate(structs, calc, worker_count=8)
    assert len(serial) == len(parallel) == 30
    for a, b in zip(serial, parallel):
        assert a.energy == b.energy
        assert np.array_equal(a.forces, b.forces)


def test_batch_evaluate_carries_failures():
    class Flaky:
        provenance = "flaky"

        def __init__(self):
            self.count = 0

        def evaluate(self, s, donor_h=None, acceptor=None):
            self.count += 1
            if self.count == 2:
                from hatpes.calculators import failed_result
                return failed_result(s.n_atoms, self.provenance, "boom")
            return SurrogatePotential().evaluate(s)

    structs = [methane_like()] * 3
    results = batch_evaluate(structs, Flaky(), worker_count=1)
    assert len(results) == 3
    assert [r.converged for r in results] == [True, False, True]


def test_batch_evaluate_empty():
    assert batch_evaluate([], SurrogatePotential(), worker_count=4) == []
