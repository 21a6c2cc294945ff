import numpy as np
import pytest

from hatpes.calculators import SurrogatePotential
from hatpes.core import KB_EV_PER_K, RngStream, Structure
from hatpes.nms import (
    NormalModes,
    analyze_structure,
    compute_hessian,
    draw_mode_displacements,
    is_linear,
    nms_sample,
    normal_mode_analysis,
    optimize_geometry,
)


@pytest.fixture(scope="module")
def calc():
    return SurrogatePotential()


def ch_diatomic(r):
    return Structure((6, 1), [[0, 0, 0], [r, 0, 0]], bonds=[(0, 1)])


def methane_like(r=1.09):
    t = r / np.sqrt(3)
    pos = np.array([
        [0.0, 0.0, 0.0],
        [t, t, t],
        [t, -t, -t],
        [-t, t, -t],
        [-t, -t, t],
    ])
    return Structure((6, 1, 1, 1, 1), pos, [(0, i) for i in range(1, 5)])


def test_optimize_diatomic_to_morse_minimum(calc):
    _, r_e, _ = calc.params.morse_params(6, 1)
    out = optimize_geometry(ch_diatomic(1.2 * r_e), calc)
    assert out.tags["relaxed"] == "true"
    r_final = np.linalg.norm(out.positions[1] - out.positions[0])
    assert abs(r_final - r_e) < 1e-3


def test_optimize_already_at_minimum(calc):
    _, r_e, _ = calc.params.morse_params(6, 1)
    out = optimize_geometry(ch_diatomic(r_e), calc)
    assert int(out.tags["opt_steps"]) <= 1
    assert np.max(np.abs(out.positions - ch_diatomic(r_e).positions)) < 1e-3


def test_optimize_step_cap_reports_nonconverged(calc):
    out = optimize_geometry(methane_like(1.4), calc, tol_force=1e-12, max_steps=2)
    assert out.tags["relaxed"] == "false"


def test_hessian_diatomic_curvature(calc):
    d_e, r_e, a = calc.params.morse_params(6, 1)
    h = compute_hessian(ch_diatomic(r_e), calc, step=0.002)
    # curvature along the bond axis equals 2 D_e a^2 for a Morse bond
    k_expected = 2 * d_e * a ** 2
    assert h[0, 0] == pytest.approx(k_expected, rel=1e-4)
    assert h[0, 3] == pytest.approx(-k_expected, rel=1e-4)
    assert np.max(np.abs(h - h.T)) == 0.0


def test_hessian_free_atoms_zero(calc):
    # two atoms far beyond every interaction range: LJ tail ~ (sigma/r)^6
    s = Structure((1, 1), [[0, 0, 0], [500.0, 0, 0]], bonds=[])
    h = compute_hessian(s, calc)
    assert np.max(np.abs(h)) < 1e-12


def test_nma_diatomic_single_mode_along_axis(calc):
    _, r_e, _ = calc.params.morse_params(6, 1)
    s = optimize_geometry(ch_diatomic(r_e), calc)
    nm = analyze_structure(s, calc)
    assert nm.n_modes == 1
    mode = nm.modes[0]
    # displacement direction is the bond axis
    off_axis = np.abs(mode[:, 1:])
    assert np.max(off_axis) < 1e-6
    assert nm.force_constants[0] > 0


def test_nma_triatomic_three_modes(calc):
    # bent water-like molecule relaxed under the surrogate
    s = Structure(
        (8, 1, 1),
        [[0.0, 0.0, 0.0], [0.96, 0.3, 0.0], [-0.3, 0.96, 0.0]],
        bonds=[(0, 1), (0, 2)],
    )
    relaxed = optimize_geometry(s, calc, tol_force=1e-6)
    assert relaxed.tags["relaxed"] == "true"
    nm = analyze_structure(relaxed, calc)
    expected = 5 if is_linear(relaxed) else 6
    assert nm.n_modes == 3 * 3 - expected
    assert np.all(nm.force_constants > 0)


def test_nma_methane_modes_positive_and_orthogonal(calc):
    s = optimize_geometry(methane_like(), calc, tol_force=1e-6)
    nm = analyze_structure(s, calc)
    assert nm.n_modes == 3 * 5 - 6
    assert np.all(nm.force_constants > 0)
    flat = nm.mw_modes.reshape(nm.n_modes, -1)
    gram = flat @ flat.T
    assert np.max(np.abs(gram - np.eye(nm.n_modes))) < 1e-8


def test_nma_rejects_unrelaxed(calc):
    s = methane_like(1.7)  # stretched past the Morse inflection: negative modes
    h = compute_hessian(s, calc)
    with pytest.raises(ValueError, match="minimum"):
        normal_mode_analysis(h, s)


def test_nma_rejects_asymmetric(calc):
    s = methane_like()
    h = compute_hessian(s, calc)
    h2 = h.copy()
    h2[0, 1] += 1e-3
    with pytest.raises(ValueError, match="symmetric"):
        normal_mode_analysis(h2, s)


def test_is_linear():
    co2ish = Structure((8, 6, 8), [[-1.2, 0, 0], [0, 0, 0], [1.2, 0, 0]])
    assert is_linear(co2ish)
    assert is_linear(Structure((6, 1), [[0, 0, 0], [1.1, 0, 0]]))
    assert not is_linear(methane_like())


@pytest.fixture(scope="module")
def methane_modes(calc):
    s = optimize_geometry(methane_like(), calc, tol_force=1e-6)
    return analyze_structure(s, calc)


def test_nms_zero_temperature_returns_reference(methane_modes):
    rng = RngStream(1, "nms-t0")
    out = nms_sample(methane_modes, rng, temperature=0.0)
    assert out.accepted
    assert np.max(np.abs(out.structure.positions
                         - methane_modes.reference.positions)) < 1e-12


def test_nms_harmonic_budget_identity(calc):
    _, r_e, _ = calc.params.morse_params(6, 1)
    s = optimize_geometry(ch_diatomic(r_e), calc, tol_force=1e-8)
    nm = analyze_structure(s, calc)
    rng = RngStream(2, "nms-budget")
    n = s.n_atoms
    for _ in range(20):
        c, r = draw_mode_displacements(nm, rng, 300.0)
        harmonic = 0.5 * nm.force_constants * r ** 2
        budget = 1.5 * c * n * KB_EV_PER_K * 300.0
        assert np.allclose(harmonic, budget, rtol=1e-12)


def test_nms_extreme_temperature_rejected(methane_modes, calc):
    rng = RngStream(3, "nms-hot")
    outcomes = [
        nms_sample(methane_modes, rng, temperature=50000.0, calc=calc)
        for _ in range(20)
    ]
    rejected = [o for o in outcomes if not o.accepted]
    assert len(rejected) == 20
    assert {o.reason for o in rejected} <= {"bond_strain", "energy_filter"}


def test_nms_acceptance_rate_at_300k(methane_modes, calc):
    rng = RngStream(4, "nms-300")
    outcomes = [
        nms_sample(methane_modes, rng, temperature=300.0, calc=calc)
        for _ in range(200)
    ]
    accepted = sum(o.accepted for o in outcomes)
    assert accepted / len(outcomes) > 0.5


def test_nms_accepted_samples_respect_filters(methane_modes, calc):
    rng = RngStream(5, "nms-filters")
    for _ in range(50):
        out = nms_sample(methane_modes, rng, 600.0, calc=calc)
        if not out.accepted:
            continue
        e = calc.evaluate(out.structure).energy
        assert e - methane_modes.reference_energy <= 5.0 + 1e-9
        ref = methane_modes.reference
        for i, j in ref.bonds:
            r0 = np.linalg.norm(ref.positions[i] - ref.positions[j])
            r1 = np.linalg.norm(out.structure.positions[i]
                                - out.structure.positions[j])
            assert abs(r1 - r0) / r0 <= 0.25 + 1e-12


def test_nms_harmonic_consistency_low_temperature(methane_modes, calc):
    # at small budgets the surrogate energy rise should track the harmonic
    # estimate within a factor of two for nearly all accepted samples
    rng = RngStream(6, "nms-harmonic")
    checked = 0
    ok = 0
    for _ in range(100):
        c, r = draw_mode_displacements(methane_modes, rng, 100.0)
        harmonic = float(np.sum(0.5 * methane_modes.force_constants * r ** 2))
        pos = methane_modes.reference.positions + np.tensordot(
            r, methane_modes.modes, axes=1
        )
        actual = (
            calc.evaluate(methane_modes.reference.with_positions(pos)).energy
            - methane_modes.reference_energy
        )
        if harmonic < 1e-6:
            continue
        checked += 1
        if 0.5 <= actual / harmonic <= 2.0:
            ok += 1
    assert checked > 50
    assert ok / checked >= 0.9
