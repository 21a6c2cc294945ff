import numpy as np
import pytest

from hatpes.core import (
    RngStream,
    Structure,
    UnknownElementError,
    bond_graph_distances,
    distance_matrix,
    infer_bonds,
    merge_structures,
    rigid_transform,
)


def test_distance_matrix_unit_separation():
    s = Structure((1, 1), [[0, 0, 0], [0, 0, 1]])
    m = distance_matrix(s)
    assert m[0, 1] == pytest.approx(1.0)
    assert m[1, 0] == pytest.approx(1.0)
    assert m[0, 0] == 0.0


def test_distance_matrix_single_atom():
    s = Structure((6,), [[1.0, 2.0, 3.0]])
    assert distance_matrix(s).shape == (1, 1)
    assert distance_matrix(s)[0, 0] == 0.0


def test_distance_matrix_equilateral_triangle():
    a = 1.5
    pts = np.array([
        [0.0, 0.0, 0.0],
        [a, 0.0, 0.0],
        [a / 2, a * np.sqrt(3) / 2, 0.0],
    ])
    m = distance_matrix(Structure((6, 6, 6), pts))
    off = m[np.triu_indices(3, k=1)]
    assert np.allclose(off, a, atol=1e-12)


def test_infer_bonds_ch():
    # threshold 1.25 * (0.76 + 0.31) = 1.3375
    s = Structure((6, 1), [[0, 0, 0], [0, 0, 1.09]])
    assert infer_bonds(s) == ((0, 1),)
    far = Structure((6, 6), [[0, 0, 0], [0, 0, 3.0]])
    assert infer_bonds(far) == ()


def test_infer_bonds_hh():
    # threshold 1.25 * 0.62 = 0.775
    s = Structure((1, 1), [[0, 0, 0], [0, 0, 0.74]])
    assert infer_bonds(s) == ((0, 1),)
    s2 = Structure((1, 1), [[0, 0, 0], [0, 0, 0.80]])
    assert infer_bonds(s2) == ()


def test_infer_bonds_unknown_element():
    s = Structure((1, 99), [[0, 0, 0], [0, 0, 1.0]])
    with pytest.raises(UnknownElementError) as err:
        infer_bonds(s)
    assert "99" in str(err.value)


def test_infer_bonds_permutation_covariant():
    rng = RngStream(7, "bond-perm")
    pos = rng.normal(size=(6, 3)) * 1.2
    elems = (6, 1, 1, 8, 1, 7)
    s = Structure(elems, pos)
    bonds = set(infer_bonds(s))
    perm = rng.generator.permutation(6)
    inv = np.argsort(perm)
    s2 = Structure(tuple(elems[p] for p in perm), pos[perm])
    bonds2 = set(infer_bonds(s2))
    remapped = {tuple(sorted((int(inv[i]), int(inv[j])))) for i, j in bonds}
    assert bonds2 == remapped


def test_rigid_transform_identity_and_rotation():
    s = Structure((1,), [[1.0, 0.0, 0.0]])
    same = rigid_transform(s, np.eye(3), np.zeros(3))
    assert np.allclose(same.positions, s.positions)
    rot_z = np.array([[-1, 0, 0], [0, -1, 0], [0, 0, 1]], dtype=float)
    flipped = rigid_transform(s, rot_z, np.zeros(3))
    assert np.allclose(flipped.positions, [[-1, 0, 0]], atol=1e-15)


def test_rigid_transform_inverse_roundtrip():
    rng = RngStream(3, "rigid")
    s = Structure((1, 6, 8), rng.normal(size=(3, 3)))
    rot = rng.random_rotation()
    t = rng.normal(size=3)
    fwd = rigid_transform(s, rot, t)
    back = rigid_transform(fwd, rot.T, -rot.T @ t)
    assert np.max(np.abs(back.positions - s.positions)) < 1e-12


def test_rigid_transform_rejects_non_orthonormal():
    s = Structure((1,), [[0, 0, 0]])
    with pytest.raises(ValueError, match="orthonormal"):
        rigid_transform(s, np.eye(3) * 1.001, np.zeros(3))


def test_distance_matrix_invariant_under_rigid_transform():
    rng = RngStream(11, "dm-invariance")
    s = Structure((6,) * 8, rng.normal(size=(8, 3)) * 2)
    m0 = distance_matrix(s)
    for _ in range(20):
        s2 = rigid_transform(s, rng.random_rotation(), rng.normal(size=3) * 5)
        assert np.max(np.abs(distance_matrix(s2) - m0)) < 1e-9


def test_structure_validation():
    with pytest.raises(ValueError):
        Structure((), np.zeros((0, 3)))
    with pytest.raises(ValueError):
        Structure((1, 1), [[0, 0, 0]])
    with pytest.raises(ValueError):
        Structure((1,), [[np.nan, 0, 0]])
    with pytest.raises(ValueError):
        Structure((1,), [[0, 0, 0]], multiplicity=0)
    with pytest.raises(ValueError):
        Structure((1, 1), [[0, 0, 0], [1, 0, 0]], bonds=[(0, 0)])
    with pytest.raises(ValueError):
        Structure((1, 1), [[0, 0, 0], [1, 0, 0]], bonds=[(0, 2)])


def test_structure_bonds_deduplicated():
    s = Structure((1, 1, 6), np.eye(3), bonds=[(1, 0), (0, 1), (2, 1)])
    assert s.bonds == ((0, 1), (1, 2))


def test_structure_positions_immutable():
    s = Structure((1,), [[0, 0, 0]])
    with pytest.raises(ValueError):
        s.positions[0, 0] = 1.0


def test_bond_graph_distances():
    # chain 0-1-2-3 plus isolated atom 4
    d = bond_graph_distances(5, [(0, 1), (1, 2), (2, 3)])
    assert d[0, 3] == 3
    assert d[0, 1] == 1
    assert d[1, 3] == 2
    assert d[0, 4] > 1000


def test_merge_structures_offsets_bonds():
    a = Structure((6, 1), [[0, 0, 0], [1, 0, 0]], bonds=[(0, 1)])
    b = Structure((8, 1), [[5, 0, 0], [6, 0, 0]], bonds=[(0, 1)], multiplicity=2)
    m = merge_structures(a, b)
    assert m.n_atoms == 4
    assert m.bonds == ((0, 1), (2, 3))
    assert m.multiplicity == 2
