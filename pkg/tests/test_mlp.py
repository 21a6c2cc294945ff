import warnings

import numpy as np
import pytest
import torch
from conftest import finite_diff_forces, max_rel_force_error

from hatpes.calculators import SurrogatePotential
from hatpes.core import Frame, RngStream, Structure, rigid_transform
from hatpes.mlp import (
    ModelConfig,
    PotentialModel,
    SpeciesScaler,
    TrainConfig,
    checkpoint_hash,
    fit_species_scaler,
    load_checkpoint,
    lr_for_epoch,
    predict_batch,
    rbf_expand,
    save_checkpoint,
    shifted_softplus,
    train,
)


def methane_like(r=1.09, center=(0, 0, 0)):
    t = r / np.sqrt(3)
    c = np.asarray(center, dtype=float)
    pos = np.vstack([c, c + [t, t, t], c + [t, -t, -t],
                     c + [-t, t, -t], c + [-t, -t, t]])
    return Structure((6, 1, 1, 1, 1), pos)


def tiny_model(seed=0, elements=(1, 6)):
    scaler = SpeciesScaler(tuple(sorted(elements)),
                           tuple(0.0 for _ in elements), 1.0)
    return PotentialModel(ModelConfig(seed=seed), scaler)


# ------------------------------------------------------------------- rbf


def test_rbf_center_hit_equals_envelope():
    cfg = ModelConfig()
    centers = np.linspace(0, cfg.cutoff, cfg.n_rbf)
    k = 7
    out = rbf_expand(float(centers[k]), cfg)
    env = 0.5 * (np.cos(np.pi * centers[k] / cfg.cutoff) + 1.0)
    assert out[k] == pytest.approx(env, rel=1e-12)


def test_rbf_zero_at_cutoff():
    out = rbf_expand(5.0, ModelConfig())
    assert np.all(out == 0.0)
    out_beyond = rbf_expand(7.3, ModelConfig())
    assert np.all(out_beyond == 0.0)


def test_rbf_gaussian_factor_value():
    cfg = ModelConfig()
    out = rbf_expand(2.5, cfg)
    env = 0.5 * (np.cos(np.pi * 2.5 / 5.0) + 1.0)
    # first center is at 0: gaussian factor exp(-0.4 * 6.25) = exp(-2.5)
    assert out[0] == pytest.approx(np.exp(-2.5) * env, rel=1e-10)
    assert np.exp(-2.5) == pytest.approx(0.082085, abs=1e-6)


def test_shifted_softplus_anchor():
    assert float(shifted_softplus(torch.tensor(0.0))) == pytest.approx(0.0)
    x = torch.tensor(3.7, dtype=torch.float64)
    expected = np.log(0.5 * np.exp(3.7) + 0.5)
    assert float(shifted_softplus(x)) == pytest.approx(expected, rel=1e-12)


# ----------------------------------------------------------------- model


def test_extensivity_two_isolated_atoms():
    model = tiny_model()
    single = Structure((6,), [[0.0, 0.0, 0.0]])
    double = Structure((6, 6), [[0.0, 0.0, 0.0], [50.0, 0.0, 0.0]])
    e1 = model.forward_energy(single)
    e2 = model.forward_energy(double)
    assert e2 == pytest.approx(2 * e1, abs=1e-9)


def test_extensivity_far_fragments():
    model = tiny_model()
    a = methane_like()
    b = methane_like(center=(80.0, 0.0, 0.0))
    merged = Structure(a.elements + b.elements,
                       np.vstack([a.positions, b.positions]))
    assert model.forward_energy(merged) == pytest.approx(
        model.forward_energy(a) + model.forward_energy(b), abs=1e-9
    )


def test_energy_permutation_invariance():
    model = tiny_model()
    s = methane_like()
    perm = [0, 3, 1, 4, 2]
    s2 = Structure(tuple(s.elements[p] for p in perm), s.positions[perm])
    assert model.forward_energy(s2) == pytest.approx(
        model.forward_energy(s), abs=1e-10
    )


def test_energy_rigid_invariance_and_force_equivariance():
    model = tiny_model(seed=3)
    rng = RngStream(17, "mlp-sym")
    s = methane_like()
    e0 = model.forward_energy(s)
    f0 = model.forward_forces(s)
    for _ in range(20):
        rot = rng.random_rotation()
        t = rng.normal(size=3) * 4
        s2 = rigid_transform(s, rot, t)
        assert abs(model.forward_energy(s2) - e0) < 1e-9
        f2 = model.forward_forces(s2)
        assert np.max(np.abs(f2 - f0 @ rot.T)) < 1e-9


def test_net_force_vanishes():
    model = tiny_model(seed=5)
    rng = RngStream(19, "mlp-net")
    s = methane_like()
    s = s.with_positions(s.positions + rng.normal(size=(5, 3)) * 0.1)
    f = model.forward_forces(s)
    assert np.linalg.norm(f.sum(axis=0)) < 1e-9


def test_forces_match_finite_differences():
    model = tiny_model(seed=7)
    rng = RngStream(23, "mlp-fd")
    for _ in range(3):
        s = methane_like()
        s = s.with_positions(s.positions + rng.normal(size=(5, 3)) * 0.15)
        analytic = model.forward_forces(s)
        fd = finite_diff_forces(model.forward_energy, s)
        assert max_rel_force_error(analytic, fd) < 1e-5


# ---------------------------------------------------------------- scaler


def test_scaler_exact_linear_recovery():
    rng = RngStream(29, "scaler")
    structures = []
    energies = []
    for _ in range(20):
        n_h = int(rng.integers(1, 6))
        n_c = int(rng.integers(1, 6))
        elems = (1,) * n_h + (6,) * n_c
        structures.append(Structure(elems, rng.normal(size=(n_h + n_c, 3)) * 4))
        energies.append(2.0 * n_h + 5.0 * n_c)
    scaler = fit_species_scaler(structures, energies)
    lookup = dict(zip(scaler.elements, scaler.means))
    assert lookup[1] == pytest.approx(2.0, abs=1e-10)
    assert lookup[6] == pytest.approx(5.0, abs=1e-10)


def test_scaler_single_element_mean():
    structures = [Structure((1,) * n, np.random.default_rng(n).normal(size=(n, 3)))
                  for n in (2, 3, 4)]
    energies = [2 * 1.5, 3 * 1.5, 4 * 1.5]
    scaler = fit_species_scaler(structures, energies)
    assert scaler.means[0] == pytest.approx(1.5, abs=1e-10)


def test_scaler_roundtrip_identity():
    s = methane_like()
    scaler = SpeciesScaler((1, 6), (-13.6, -1000.0), 2.0)
    e = -1054.123456789
    assert scaler.restore(s, scaler.remove(s, e)) == pytest.approx(e, abs=1e-12)


def test_scaler_rank_deficient_warns():
    # constant composition: counts matrix has rank 1 for two elements
    structures = [methane_like(center=(i, 0, 0)) for i in range(5)]
    energies = [1.0, 1.1, 0.9, 1.05, 0.95]
    with pytest.warns(UserWarning, match="ridge"):
        fit_species_scaler(structures, energies)


# -------------------------------------------------------------- training


def test_lr_schedule_exact_values():
    cfg = TrainConfig()
    for k in range(1, 40):
        assert lr_for_epoch(cfg, k) == pytest.approx(
            1e-3 * 0.995 ** (k - 1), rel=1e-12
        )


def surrogate_frames(n, seed, spread=0.05):
    # near-equilibrium, energy-filtered data, like the generation pipeline
    calc = SurrogatePotential()
    rng = RngStream(seed, "frames")
    frames = []
    base = methane_like()
    e0 = calc.evaluate(base).energy
    while len(frames) < n:
        s = base.with_positions(base.positions
                                + rng.normal(size=(5, 3)) * spread)
        res = calc.evaluate(s)
        if res.energy - e0 <= 5.0:
            frames.append(Frame(s, res.energy, res.forces))
    return frames


def test_loss_with_zero_force_weight_ignores_forces():
    frames = surrogate_frames(8, 31)
    wrong_forces = [Frame(f.structure, f.energy, np.zeros_like(f.forces))
                    for f in frames]
    cfg = TrainConfig(w_forces=0.0, max_epochs=3, batch_size=4, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaler = fit_species_scaler([f.structure for f in frames],
                                    [f.energy for f in frames])
    m1 = PotentialModel(ModelConfig(seed=11), scaler)
    m2 = PotentialModel(ModelConfig(seed=11), scaler)
    r1 = train(m1, frames, frames[:2], cfg)
    r2 = train(m2, wrong_forces, wrong_forces[:2], cfg)
    # identical training trajectories: force labels never touched the loss
    assert [h["train_loss"] for h in r1.history] == \
           [h["train_loss"] for h in r2.history]


def test_overfit_small_set_memorizes_energies():
    # memorization-capacity run: 50 samples, 500 epochs total, no early
    # stop; the second half shifts the loss toward energies so the
    # per-structure offsets settle
    frames = surrogate_frames(50, 37, spread=0.04)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaler = fit_species_scaler([f.structure for f in frames],
                                    [f.energy for f in frames])
    model = PotentialModel(ModelConfig(seed=2), scaler)
    stage1 = TrainConfig(max_epochs=250, batch_size=8, lr_init=2e-3,
                         lr_decay=0.997, seed=3)
    stage2 = TrainConfig(max_epochs=250, batch_size=8, lr_init=1e-3,
                         lr_decay=0.99, w_energy=1000.0, w_forces=1.0, seed=4)
    r1 = train(model, frames, [], stage1)
    assert not r1.aborted
    r2 = train(r1.model, frames, [], stage2)
    assert not r2.aborted
    preds = predict_batch(r2.model, [f.structure for f in frames])
    errors = [abs(e - f.energy) / f.structure.n_atoms
              for (e, _), f in zip(preds, frames)]
    assert np.mean(errors) < 1e-3  # < 1 meV/atom


def test_training_deterministic_checkpoint_hash(tmp_path):
    frames = surrogate_frames(12, 41)
    cfg = TrainConfig(max_epochs=4, batch_size=4, seed=5, deterministic=True)
    hashes = []
    for run in range(2):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            scaler = fit_species_scaler([f.structure for f in frames],
                                        [f.energy for f in frames])
        model = PotentialModel(ModelConfig(seed=4), scaler)
        result = train(model, frames, frames[:3], cfg,
                       rng=RngStream(99, "det"))
        path = tmp_path / f"run{run}.ckpt"
        save_checkpoint(result.model, path, cfg.config_hash())
        hashes.append(checkpoint_hash(path))
    assert hashes[0] == hashes[1]


# ------------------------------------------------------------- prediction


def test_predict_batch_partition_invariance():
    model = tiny_model(seed=9)
    rng = RngStream(43, "pred")
    structures = [
        methane_like().with_positions(
            methane_like().positions + rng.normal(size=(5, 3)) * 0.1
        )
        for _ in range(10)
    ]
    single = [predict_batch(model, [s])[0] for s in structures]
    batched = predict_batch(model, structures, batch_size=32)
    for (e1, f1), (e2, f2) in zip(single, batched):
        assert abs(e1 - e2) < 1e-10
        assert np.max(np.abs(f1 - f2)) < 1e-10


def test_predict_batch_empty():
    assert predict_batch(tiny_model(), []) == []


def test_predict_batch_unseen_element():
    model = tiny_model(elements=(1, 6))
    s = Structure((8,), [[0.0, 0.0, 0.0]])
    with pytest.raises(ValueError, match="element 8"):
        predict_batch(model, [s])


# ------------------------------------------------------------- checkpoint


def test_checkpoint_roundtrip(tmp_path):
    model = tiny_model(seed=13)
    s = methane_like()
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path, "confhash")
    loaded = load_checkpoint(path)
    assert loaded.config == model.config
    assert loaded.scaler == model.scaler
    assert loaded.forward_energy(s) == pytest.approx(
        model.forward_energy(s), abs=1e-12
    )
    f1 = model.forward_forces(s)
    f2 = loaded.forward_forces(s)
    assert np.max(np.abs(f1 - f2)) < 1e-12


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTAMODEL")
    with pytest.raises(ValueError, match="magic"):
        load_checkpoint(path)
