import collections

import numpy as np
import pytest

from hatpes.calculators import SurrogatePotential
from hatpes.core import RngStream, infer_bonds, neighbor_indices
from hatpes.nms import analyze_structure, optimize_geometry
from hatpes.templates import (
    default_mixing_policy,
    list_templates,
    load_library,
    pair_sampler,
)


def test_library_loads_and_is_sorted():
    lib = load_library()
    assert len(lib) >= 12
    names = [t.name for t in lib]
    assert names == sorted(names)


def test_list_templates_filters():
    amino = list_templates(["aminoacid"])
    assert len(amino) >= 10
    dipep = list_templates(["dipeptide"])
    assert len(dipep) >= 2
    capped = list_templates(["dipeptide", "capped"])
    assert all(t.capping == "capped" for t in capped)
    assert len(list_templates()) == len(load_library())


def test_list_templates_unknown_tag():
    with pytest.raises(ValueError, match="unknown template tag"):
        list_templates(["nonexistent"])


def test_template_sizes_in_contract_range():
    for t in load_library():
        assert 10 <= t.structure.n_atoms <= 130


def test_eligible_h_annotations_valid():
    for t in load_library():
        for h in t.eligible_h:
            assert t.structure.elements[h] == 1
            nbrs = neighbor_indices(t.structure.bonds, h)
            assert len(nbrs) == 1
            assert t.structure.elements[nbrs[0]] in (6, 7, 8)


def test_bond_tables_match_inference():
    for t in load_library():
        assert set(t.structure.bonds) == set(infer_bonds(t.structure))


@pytest.mark.parametrize("template", load_library(), ids=lambda t: t.name)
def test_every_template_relaxes_and_analyzes(template):
    calc = SurrogatePotential()
    relaxed = optimize_geometry(template.structure, calc)
    assert relaxed.tags["relaxed"] == "true"
    nm = analyze_structure(relaxed, calc)
    expected_drop = 5 if template.structure.n_atoms == 2 else 6
    assert nm.n_modes == 3 * template.structure.n_atoms - expected_drop
    assert np.all(nm.force_constants > 0)


def test_pair_sampler_intra_only():
    rng = RngStream(21, "pairs-intra")
    for _ in range(50):
        draw = pair_sampler(rng, {"intra": 1.0})
        assert draw.hat_type == "intra"
        assert draw.donor is draw.acceptor


def test_pair_sampler_equal_policy_frequencies():
    rng = RngStream(22, "pairs-freq")
    policy = default_mixing_policy()
    counts = collections.Counter()
    n = 10_000
    for _ in range(n):
        counts[pair_sampler(rng, policy).system_class] += 1
    for cls, weight in policy.items():
        assert counts[cls] / n == pytest.approx(weight, abs=0.02)


def test_pair_sampler_seeded_determinism():
    a = [pair_sampler(RngStream(5, f"d/{i}")) for i in range(20)]
    b = [pair_sampler(RngStream(5, f"d/{i}")) for i in range(20)]
    assert [(x.donor.name, x.acceptor.name, x.hat_type) for x in a] == \
           [(x.donor.name, x.acceptor.name, x.hat_type) for x in b]


def test_pair_sampler_rejects_bad_policy():
    rng = RngStream(1, "bad")
    with pytest.raises(ValueError, match="unknown system class"):
        pair_sampler(rng, {"nonsense": 1.0})
    with pytest.raises(ValueError, match="sum"):
        pair_sampler(rng, {"intra": 0.4})
