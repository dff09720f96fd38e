import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from bottleneck_lab.grid import simplex_grid
from bottleneck_lab.ib import (
    ceb_solve,
    ceb_value,
    g_n,
    golden_section_max,
    hamming_ib,
    hamming_ib_hull,
    hamming_rate_formula,
    ib_value,
    invert_g_n,
    lower_convex_envelope,
    maximize_phi,
    minimize_phi,
    phi,
    reduced_ib,
    set_Q_contains,
)
from bottleneck_lab.oracle import ceb_oracle, ib_oracle
from bottleneck_lab.prob import (
    basis,
    binary_entropy,
    bsc,
    circulant_from_noise,
    conditional_entropy,
    entropy,
    hamming_channel,
    hamming_noise,
    mutual_information,
    tito_channel,
    uniform,
)
from bottleneck_lab.symmetry import cyclic_shifts, orbit

from conftest import random_channel

LOG3 = math.log2(3)
H3 = hamming_channel(3, 0.5)
C_GRID = np.linspace(0.0, LOG3, 20)


@pytest.fixture(scope="module")
def hamming_curve():
    return [ib_value(H3, uniform(3), c) for c in C_GRID]


# -------------------------------------------------------------------- phi

def test_phi_examples():
    p = np.array([0.2, 0.3, 0.5])
    T = tito_channel(0.1, 0.05)
    assert phi(T, p, 0.0) == pytest.approx(entropy(T.entries @ p), abs=1e-15)
    assert phi(np.eye(3), p, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert phi(hamming_channel(2, 0.5), uniform(2), 0.5) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("lam", [-0.1, 1.5])
def test_phi_rejects_lambda(lam):
    with pytest.raises(ValueError):
        phi(H3, uniform(3), lam)


def test_phi_rejects_dimension():
    with pytest.raises(ValueError):
        phi(H3, uniform(2), 0.5)


def test_minimize_phi_at_zero_is_best_vertex():
    T = tito_channel(0.2, 0.05)
    s = minimize_phi(T, 0.0)
    vals = [entropy(T.entries[:, i]) for i in range(3)]
    assert s.value == pytest.approx(min(vals), abs=1e-12)
    assert np.max(s.p) == pytest.approx(1.0)


def test_minimize_phi_identity():
    for lam in (0.0, 0.4, 0.9):
        s = minimize_phi(np.eye(3), lam)
        assert s.value == pytest.approx(0.0, abs=1e-12)
        # ties over the vertices go to the lexicographically smallest
        assert np.allclose(s.p, basis(3, 2))


def test_minimize_phi_matches_dense_grid():
    s = minimize_phi(H3, 0.5)
    P = simplex_grid(3, 400)
    grid = np.array([phi(H3, p, 0.5) for p in P])
    assert s.value <= grid.min() + 1e-12
    # 3 does not divide 400, so polish the best grid point with an independent local solver
    res = minimize(lambda x: phi(H3, np.clip(x, 0, None) / np.clip(x, 0, None).sum(), 0.5), P[np.argmin(grid)],
                   method="SLSQP", bounds=[(0, 1)] * 3,
                   constraints={"type": "eq", "fun": lambda x: x.sum() - 1}, options={"ftol": 1e-14})
    assert abs(s.value - min(res.fun, grid.min())) <= 1e-6
    assert s.value == pytest.approx(phi(H3, s.p, 0.5), abs=1e-12)


def test_maximize_phi_dominates_grid():
    T = tito_channel(0.1, 0.05)
    s = maximize_phi(T, 0.7)
    P = simplex_grid(3, 100)
    assert s.value >= max(phi(T, p, 0.7) for p in P) - 1e-12


def test_minimize_phi_deterministic():
    T = tito_channel(0.1, 0.05)
    a, b = minimize_phi(T, 0.25), minimize_phi(T, 0.25)
    assert np.array_equal(a.p, b.p) and a.value == b.value


# -------------------------------------------------------------- envelope

def test_envelope_of_flat_phi():
    env = lower_convex_envelope(np.eye(3), 1.0)
    for p in simplex_grid(3, 20):
        assert env.evaluate(p) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lam", [0.1, 0.3, 0.6])
def test_envelope_below_phi_on_grid(lam):
    T = tito_channel(0.1, 0.05)
    env = lower_convex_envelope(T, lam, 100)
    vals = env.evaluate_many(env.points)
    assert np.all(vals <= env.values + 1e-12)


def test_envelope_convex_along_segments(rng):
    T = tito_channel(0.1, 0.05)
    env = lower_convex_envelope(T, 0.3, 100)
    t = np.linspace(0, 1, 41)
    for _ in range(20):
        a, b = rng.dirichlet(np.ones(3), size=2)
        vals = env.evaluate_many(np.outer(1 - t, a) + np.outer(t, b))
        assert np.all(np.diff(vals, 2) >= -1e-12)


def test_envelope_flat_on_orbit_hull(rng):
    # lam = 0.2 has an interior non-uniform minimiser for this channel
    s = minimize_phi(H3, 0.2)
    assert 0 < s.p.min() and s.p.max() < 1 and not np.allclose(s.p, uniform(3))
    env = lower_convex_envelope(H3, 0.2)
    orb = orbit(s.p, cyclic_shifts(3))
    for _ in range(30):
        w = rng.dirichlet(np.ones(3))
        q = sum(wi * o for wi, o in zip(w, orb))
        # grid discretisation error only
        assert abs(env.evaluate(q) - s.value) <= 1e-4


def test_envelope_guards():
    with pytest.raises(ValueError, match="reduced_ib"):
        lower_convex_envelope(hamming_channel(5, 0.5), 0.5)
    with pytest.raises(ValueError):
        lower_convex_envelope(H3, 0.5, grid_res=20)


def test_envelope_decompose_reconstructs_point():
    env = lower_convex_envelope(tito_channel(0.1, 0.05), 0.4, 100)
    q = np.array([0.5, 0.3, 0.2])
    pts, w = env.decompose(q)
    assert np.allclose(w @ pts, q, atol=1e-10)
    assert w @ [phi(tito_channel(0.1, 0.05), p, 0.4) for p in pts] == pytest.approx(env.evaluate(q), abs=1e-9)


def test_golden_section_finds_concave_max():
    x, f = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-8) and f == pytest.approx(0.0, abs=1e-15)


# -------------------------------------------------------------------- CEB

@pytest.mark.parametrize("T,q", [
    (H3, uniform(3)),
    (tito_channel(0.1, 0.05), np.array([0.5, 0.3, 0.2])),
    (bsc(0.2), np.array([0.3, 0.7])),
    (np.array([[0.7, 0.2, 0.1], [0.3, 0.8, 0.9]]), np.array([0.2, 0.3, 0.5])),
])
def test_ceb_endpoints_exact(T, q):
    T = np.asarray(T)
    assert ceb_value(T, q, 0.0) == conditional_entropy(T, q)
    assert ceb_value(T, q, entropy(q)) == entropy(T @ q)


def test_ceb_rejects_x():
    with pytest.raises(ValueError):
        ceb_value(H3, uniform(3), -0.1)
    with pytest.raises(ValueError):
        ceb_value(H3, uniform(3), 2.0)


def test_ceb_monotone_and_convex():
    T = tito_channel(0.1, 0.05)
    q = np.array([0.5, 0.3, 0.2])
    xs = np.linspace(0, entropy(q), 12)
    F = np.array([ceb_value(T, q, x) for x in xs])
    assert np.all(np.diff(F) >= -1e-9)
    assert np.all(np.diff(F, 2) >= -1e-6)


@pytest.mark.parametrize("x", [0.4, 1.0])
def test_ceb_matches_oracle(x, fast_cfg):
    q = uniform(3)
    F = ceb_value(H3, q, x)
    o = ceb_oracle(H3, q, x, 3, fast_cfg)
    assert abs(F - o.value) <= 5e-3


def test_ceb_multiplier_in_range():
    F, lam = ceb_solve(H3, uniform(3), 0.8)
    assert 0.0 <= lam <= 1.0


# --------------------------------------------------------------------- IB

def test_ib_endpoints():
    for T, q in [(H3, uniform(3)), (tito_channel(0.1, 0.05), np.array([0.6, 0.3, 0.1]))]:
        assert ib_value(T, q, 0.0).R == pytest.approx(0.0, abs=1e-12)
        assert ib_value(T, q, entropy(q)).R == pytest.approx(mutual_information(T, q), abs=1e-12)


def test_ib_rejects_budget():
    with pytest.raises(ValueError):
        ib_value(H3, uniform(3), 2.0)


def test_ib_matches_hamming_closed_form(hamming_curve):
    for sol, c in zip(hamming_curve, C_GRID):
        assert abs(sol.R - hamming_ib(3, 0.5, c).R) <= 5e-3
        assert abs(sol.R - hamming_ib_hull(3, 0.5, c)[0]) <= 5e-3
        assert sol.method == "envelope"


def test_ib_curve_monotone_concave(hamming_curve):
    R = np.array([s.R for s in hamming_curve])
    assert np.all(np.diff(R) >= -1e-9)
    assert np.all(np.diff(R, 2) <= 1e-6)
    for s in hamming_curve:
        assert 0.0 <= s.R <= s.C + 1e-12
        assert s.R <= mutual_information(H3, uniform(3)) + 1e-12


def test_ib_is_ceb_complement(rng):
    for _ in range(3):
        T = random_channel(rng)
        q = rng.dirichlet(np.ones(3))
        C = rng.uniform(0, entropy(q))
        R = ib_value(T, q, C).R
        hy = entropy(T.entries @ q)
        assert R == pytest.approx(min(hy - ceb_value(T, q, entropy(q) - C), C, mutual_information(T, q)), abs=1e-12)


@pytest.mark.slow
def test_ib_matches_oracle_on_random_channels(fast_cfg):
    rng = np.random.default_rng(2024)
    for m in (2, 3):
        T = random_channel(rng, m=m, n=3)
        q = rng.dirichlet(np.ones(3))
        for C in (0.25 * entropy(q), 0.6 * entropy(q)):
            R = ib_value(T, q, C).R
            o = ib_oracle(T, q, C, 3, fast_cfg.with_(restarts=16))
            assert abs(R - o.value) <= 5e-3


def test_ib_circulant_matches_reduced():
    z = np.array([0.7, 0.2, 0.1])
    T = circulant_from_noise(z)
    for C in (0.3, 0.9):
        assert abs(ib_value(T, uniform(3), C).R - reduced_ib(z, C).R) <= 5e-3


# ------------------------------------------------------------- reduced IB

def test_reduced_endpoints():
    z = np.array([0.8, 0.15, 0.05])
    s0 = reduced_ib(z, 0.0)
    assert s0.R == 0.0 and np.allclose(s0.noise_vector, uniform(3))
    s1 = reduced_ib(z, LOG3)
    assert s1.R == pytest.approx(LOG3 - entropy(z), abs=1e-12)
    assert np.allclose(s1.noise_vector, basis(3, 0))


@pytest.mark.parametrize("C", [0.2, 0.5, 1.0])
def test_reduced_matches_hamming(C):
    s = reduced_ib(hamming_noise(3, 0.5), C)
    assert abs(s.R - hamming_ib(3, 0.5, C).R) <= 1e-4


def test_reduced_matches_hamming_on_grid():
    z = hamming_noise(3, 0.5)
    for c in C_GRID:
        s = reduced_ib(z, c)
        assert abs(s.R - hamming_ib(3, 0.5, c).R) <= 1e-4
        if s.noise_vector is not None:
            assert entropy(s.noise_vector) == pytest.approx(LOG3 - c, abs=1e-6)
            # the returned v realises the rate
            assert LOG3 - entropy(circulant_from_noise(z).entries @ s.noise_vector) == pytest.approx(s.R, abs=1e-6)


def test_reduced_rejects_budget():
    with pytest.raises(ValueError):
        reduced_ib(hamming_noise(3, 0.5), 1.7)


# --------------------------------------------------------------- Hamming

def test_g_n_examples():
    for n in (2, 3, 5):
        assert g_n(n, 0.0) == 0.0
        assert g_n(n, 1.0) == pytest.approx(math.log2(n), abs=1e-15)
    assert g_n(2, 0.5) == pytest.approx(1 - binary_entropy(0.25), abs=1e-15)
    assert g_n(2, 0.5) == pytest.approx(0.18872, abs=1e-5)
    with pytest.raises(ValueError):
        g_n(3, 1.2)


@given(st.integers(2, 8), st.floats(0, 1), st.floats(0, 1))
def test_g_n_monotone_and_matches_entropy(n, a, b):
    lo, hi = sorted((a, b))
    assert g_n(n, lo) <= g_n(n, hi) + 1e-15
    v = lo * basis(n, 0) + (1 - lo) * uniform(n)
    assert g_n(n, lo) == pytest.approx(math.log2(n) - entropy(v), abs=1e-12)


def test_invert_g_n_examples():
    assert invert_g_n(3, 0.0) == 0.0
    assert invert_g_n(3, LOG3) == 1.0
    assert invert_g_n(2, 0.5) == pytest.approx(0.77994, abs=1e-5)
    with pytest.raises(ValueError):
        invert_g_n(2, 1.5)


@given(st.integers(2, 8), st.floats(0, 1))
def test_invert_g_n_round_trip(n, t):
    C = t * math.log2(n)
    assert abs(g_n(n, invert_g_n(n, C)) - C) <= 1e-10


def test_hamming_ib_examples():
    assert hamming_ib(4, 0.3, 0.0).R == pytest.approx(0.0, abs=1e-15)
    assert hamming_ib(4, 1.0, 2.0).R == pytest.approx(2.0, abs=1e-12)
    s = hamming_ib(2, 0.5, 0.5)
    assert s.beta == pytest.approx(0.77994, abs=1e-5)
    # 1 - h2(0.30501) evaluated directly is 0.11267
    p = (1 - 0.5 * 0.77994) / 2
    assert s.R == pytest.approx(1 + p * math.log2(p) + (1 - p) * math.log2(1 - p), abs=1e-5)
    assert s.R == pytest.approx(0.11267, abs=1e-5)
    assert s.R == pytest.approx(1 - binary_entropy((1 - 0.5 * s.beta) / 2), abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 1))
def test_hamming_binary_reduction(alpha, t):
    s = hamming_ib(2, alpha, t)
    assert s.R == pytest.approx(1 - binary_entropy((1 - alpha * s.beta) / 2), abs=1e-12)


@given(st.integers(2, 6), st.floats(0, 1), st.floats(0, 1))
def test_hamming_expanded_formula(n, alpha, t):
    s = hamming_ib(n, alpha, t * math.log2(n))
    assert hamming_rate_formula(n, alpha, s.beta) == pytest.approx(s.R, abs=1e-12)
    assert g_n(n, s.beta) == pytest.approx(s.C, abs=1e-10)
    assert np.allclose(s.v, s.beta * basis(n, 0) + (1 - s.beta) * uniform(n))


def test_hamming_hull_is_concave_majorant():
    R_t, ct = hamming_ib_hull(3, 0.5, 0.1)
    assert ct == pytest.approx(0.14839, abs=1e-4)
    cs = np.linspace(0, LOG3, 200)
    hull = np.array([hamming_ib_hull(3, 0.5, c)[0] for c in cs])
    closed = np.array([hamming_ib(3, 0.5, c).R for c in cs])
    assert np.all(hull >= closed - 1e-15)
    assert np.all(np.diff(hull, 2) <= 1e-10)
    # the closed form is not concave near zero for n >= 3
    assert np.any(np.diff(closed, 2) > 1e-8)
    # binary case needs no time sharing
    assert hamming_ib_hull(2, 0.5, 0.1)[1] == 0.0


# ------------------------------------------------------- set membership

def test_set_Q_uniform_contained():
    for C in (0.2, 0.8):
        m = set_Q_contains(H3, uniform(3), C)
        assert m and np.allclose(m.weights, uniform(len(m.orbit)), atol=1e-9)
        assert math.log2(3) - entropy(m.p_star) == pytest.approx(C, abs=1e-6)


def test_set_Q_vertex_not_contained():
    assert not set_Q_contains(tito_channel(0.1, 0.05), basis(3, 0), 0.5)


def test_set_Q_mismatched_budget():
    # the only grid multiplier gives p* = u, i.e. C = 0
    assert not set_Q_contains(H3, uniform(3), 0.3, lambda_grid=[0.5])
    assert not set_Q_contains(H3, uniform(3), 1.7)


def test_set_Q_witness_mixture(rng):
    m = set_Q_contains(H3, uniform(3), 0.8)
    w = rng.dirichlet(np.ones(3))
    q = sum(wi * o for wi, o in zip(w, m.orbit))
    m2 = set_Q_contains(H3, q, 0.8)
    assert m2
    assert np.allclose(sum(wi * o for wi, o in zip(m2.weights, m2.orbit)), q, atol=1e-8)


def test_set_Q_requires_symmetry():
    with pytest.raises(ValueError):
        set_Q_contains([[0.9, 0.4], [0.1, 0.6]], [0.5, 0.5], 0.2)
