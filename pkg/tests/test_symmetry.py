import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bottleneck_lab.ib import phi
from bottleneck_lab.prob import (
    basis,
    bms_channel,
    circulant_from_noise,
    hamming_channel,
    tito_channel,
    uniform,
)
from bottleneck_lab.symmetry import (
    Permutation,
    SymmetryComplexityError,
    SymmetryPair,
    cyclic_shifts,
    cyclic_shifts_orbit,
    find_symmetry_group,
    is_circulant,
    is_input_symmetric,
    is_output_symmetric,
    orbit,
    regular_transversal,
)


def test_permutation_algebra():
    a = Permutation((1, 2, 0))
    b = Permutation((0, 2, 1))
    assert (a * b).matrix() == pytest.approx(a.matrix() @ b.matrix())
    assert (a * a.inverse()).is_identity()
    assert a.cycle_notation() == "(0 1 2)"
    assert Permutation.identity(3).cycle_notation() == "()"
    p = np.array([0.5, 0.3, 0.2])
    assert np.allclose(a.apply(p), a.matrix() @ p)
    with pytest.raises(ValueError):
        Permutation((0, 0, 1))


def test_shift_matches_roll():
    p = np.array([0.6, 0.3, 0.1, 0.0])
    assert np.allclose(Permutation.shift(4, 1).apply(p), np.roll(p, 1))


def test_identity_channel_has_full_group():
    g = find_symmetry_group(np.eye(3))
    assert g.order == 6
    assert all(pair.input_perm == pair.output_perm for pair in g.pairs)
    assert is_input_symmetric(g) and is_output_symmetric(g)


def test_bms_input_group_order_two():
    T = bms_channel([0.7, 0.2, 0.1])
    g = find_symmetry_group(T)
    assert len(g.input_group) == 2
    assert is_input_symmetric(g)
    swap = Permutation((1, 0))
    rev = Permutation((2, 1, 0))
    assert SymmetryPair(swap, rev) in g.pairs
    assert SymmetryPair(swap, rev).holds_for(T.entries)


def test_tito_group_is_cyclic():
    g = find_symmetry_group(tito_channel(0.1, 0.05))
    assert set(g.input_group) == set(cyclic_shifts(3))
    assert g.order == 3
    assert is_input_symmetric(g)


def test_tito_with_equal_noise_gains_reflections():
    g = find_symmetry_group(tito_channel(0.1, 0.1))
    assert len(g.input_group) == 6


def test_non_symmetric_channel():
    g = find_symmetry_group([[1.0, 0.5], [0.0, 0.5]])
    assert g.order == 1
    assert not is_input_symmetric(g)


def test_duplicate_rows_record_every_row_matching():
    T = np.array([[0.25, 0.25], [0.25, 0.25], [0.5, 0.5]])
    g = find_symmetry_group(T)
    assert g.order == 4  # both input perms times both swaps of the equal rows


@pytest.mark.parametrize("T", [np.eye(3), tito_channel(0.1, 0.05), hamming_channel(4, 0.3),
                               bms_channel([0.6, 0.3, 0.1]), [[0.7, 0.2, 0.3], [0.3, 0.8, 0.7]]])
def test_group_closure(T):
    g = find_symmetry_group(T)
    pairs = set(g.pairs)
    n, m = g.input_dim, g.output_dim
    assert SymmetryPair(Permutation.identity(n), Permutation.identity(m)) in pairs
    for a, b in itertools.product(pairs, repeat=2):
        assert a * b in pairs


def test_complexity_guard():
    with pytest.raises(SymmetryComplexityError, match="circulant_from_noise"):
        find_symmetry_group(np.eye(9))


def test_is_circulant():
    z = is_circulant(hamming_channel(4, 0.3))
    assert np.allclose(z, [0.3 + 0.7 / 4, 0.7 / 4, 0.7 / 4, 0.7 / 4])
    w = np.array([0.5, 0.2, 0.2, 0.1])
    assert np.allclose(is_circulant(circulant_from_noise(w)), w)
    assert is_circulant(bms_channel([0.7, 0.2, 0.1])) is None
    assert is_circulant(np.array([[0.9, 0.2], [0.1, 0.8]])) is None


@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=5).filter(lambda v: sum(v) > 1e-3))
def test_circulant_round_trip(v):
    z = np.array(v) / sum(v)
    T = circulant_from_noise(z)
    back = is_circulant(T)
    assert back is not None
    assert np.allclose(circulant_from_noise(back).entries, T.entries, atol=1e-9)
    g = find_symmetry_group(T)
    assert set(cyclic_shifts(len(z))) <= set(g.input_group)


def test_orbit_examples():
    g = find_symmetry_group(tito_channel(0.1, 0.05))
    assert len(cyclic_shifts_orbit(uniform(3), g)) == 1
    orb = cyclic_shifts_orbit(basis(3, 0), g)
    assert sorted(map(tuple, orb)) == sorted(map(tuple, np.eye(3)))
    with pytest.raises(ValueError):
        cyclic_shifts_orbit(uniform(4), g)


def test_orbit_mean_is_uniform(rng):
    for n in (3, 4, 5):
        g = find_symmetry_group(circulant_from_noise(rng.dirichlet(np.ones(n))))
        p = rng.dirichlet(np.ones(n))
        assert np.allclose(np.mean(orbit(p, cyclic_shifts(n)), axis=0), uniform(n), atol=1e-15)
        perms = regular_transversal(g)
        assert len(perms) == n
        assert np.allclose(np.mean([G.apply(p) for G in perms], axis=0), uniform(n), atol=1e-15)


def test_regular_transversal_without_cyclic_shifts():
    # symmetric under (0 1)(2 3) and (0 2)(1 3) but not under a 4-cycle
    T = np.array([[0.7, 0.2, 0.1, 0.0], [0.2, 0.7, 0.0, 0.1], [0.1, 0.0, 0.7, 0.2], [0.0, 0.1, 0.2, 0.7]])
    g = find_symmetry_group(T)
    assert Permutation.shift(4) not in g.input_group
    perms = regular_transversal(g)
    images = np.array([[G(i) for i in range(4)] for G in perms])
    for col in images.T:
        assert sorted(col) == [0, 1, 2, 3]


def test_report_and_generators():
    g = find_symmetry_group(tito_channel(0.1, 0.05))
    rep = g.report()
    assert rep["order"] == 3 and rep["input_transitive"]
    assert len(rep["generators"]) == 1


@pytest.mark.parametrize("T", [tito_channel(0.1, 0.05), hamming_channel(3, 0.5), bms_channel([0.6, 0.3, 0.1]),
                               circulant_from_noise([0.5, 0.3, 0.15, 0.05])])
def test_phi_invariance(T, rng):
    g = find_symmetry_group(T)
    n = g.input_dim
    for pair in g.pairs:
        for _ in range(50):
            p = rng.dirichlet(np.ones(n))
            lam = rng.uniform()
            assert abs(phi(T, pair.input_perm.apply(p), lam) - phi(T, p, lam)) <= 1e-12


def test_symmetry_cached_on_channel():
    T = tito_channel(0.1, 0.05)
    assert T.symmetry is T.symmetry
    assert len(T.symmetry.pairs) == 3
