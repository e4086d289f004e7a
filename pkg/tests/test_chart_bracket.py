import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spincm.dynamics.bracket import (
    Observable,
    bracket_flat,
    bracket_observable,
    coordinate_observable,
    hamiltonian_observable,
    poisson_bracket,
    spin_entry_observable,
)
from spincm.dynamics.chart import DarbouxChart, chart_for
from spincm.openchain import random_open_state
from spincm.periodic import random_periodic_state

from .conftest import fd_grad

seeds = st.integers(0, 2**32 - 1)


def _make(kind, N, n, seed):
    rng = np.random.default_rng(seed)
    if kind == "periodic":
        return random_periodic_state(N, n, rng)
    return random_open_state(N, n, rng)


kinds = st.sampled_from(["periodic", "open"])


@given(kinds, st.integers(2, 4), st.integers(1, 3), seeds)
def test_flat_round_trip(kind, N, n, seed):
    s = _make(kind, N, n, seed)
    c = chart_for(s)
    z = c.to_flat(s)
    assert z.size == c.dim
    assert np.array_equal(c.to_flat(c.from_flat(z)), z)


@given(kinds, st.integers(2, 4), st.integers(1, 2), seeds)
def test_casimir_gradient_matches_finite_differences(kind, N, n, seed):
    s = _make(kind, N, n, seed)
    c = chart_for(s)
    z = c.to_flat(s)
    for k in c.sites:
        for d in range(2, N + 1):
            g = c.casimir_grad(z, k, d)
            fd = fd_grad(lambda w: c.casimir_value(w, k, d), z)
            assert np.allclose(g, fd, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(fd).max()))


@pytest.mark.parametrize("kind", ["periodic", "open"])
def test_poisson_matrix_antisymmetric(kind, rng):
    s = random_periodic_state(3, 2, rng) if kind == "periodic" else random_open_state(3, 2, rng)
    c = chart_for(s)
    P = c.poisson_matrix(c.to_flat(s))
    assert np.allclose(P, -P.T, atol=1e-14)


def test_canonical_block_brackets(rng):
    s = random_open_state(3, 2, rng)
    N = 3
    for i in range(N):
        for j in range(N):
            qp = poisson_bracket(coordinate_observable("q", i), coordinate_observable("p", j), s)
            assert qp == pytest.approx(((i == j) - 1 / N) / (2 * N), abs=1e-15)
            ab = poisson_bracket(coordinate_observable("a", N + i), coordinate_observable("b", N + j), s, units="matrix")
            assert ab == pytest.approx(float(i == j), abs=1e-15)
    # spins at different sites commute
    assert poisson_bracket(coordinate_observable("a", 0), coordinate_observable("b", N), s) == 0.0


def test_spin_entries_are_lie_poisson(rng):
    s = random_periodic_state(3, 2, rng)
    mu = s.mus[1]
    N = 3
    for i, j, k, l in np.ndindex(N, N, N, N):
        got = poisson_bracket(spin_entry_observable(1, i, j), spin_entry_observable(1, k, l), s, units="matrix")
        want = (j == k) * mu[i, l] - (l == i) * mu[k, j]
        assert got == pytest.approx(want, abs=1e-12)


def _lb_observable(key, i, j):
    """Matrix entry ``M_ij`` of a boundary point, ``i < j``."""
    N = 3
    iu = list(zip(*np.triu_indices(N, 1)))
    return coordinate_observable(key, iu.index((i, j)))


def test_boundary_blocks_are_so_lie_poisson(rng):
    s = random_open_state(3, 1, rng)
    L = s.L
    # so(3): {M_ij, M_kl} (matrix units) = delta_jk M_il - delta_li M_kj - delta_ik M_jl + delta_lj M_ki, halved
    pairs = [(0, 1), (0, 2), (1, 2)]
    for (i, j) in pairs:
        for (k, l) in pairs:
            got = poisson_bracket(_lb_observable("l", i, j), _lb_observable("l", k, l), s, units="matrix")
            want = 0.5 * ((j == k) * L[i, l] - (l == i) * L[k, j] - (i == k) * L[j, l] + (l == j) * L[k, i])
            assert got == pytest.approx(want, abs=1e-13)


def test_boundary_casimir_is_central(rng):
    s = random_open_state(4, 1, rng)
    c = chart_for(s)
    sl = c.slices["l"]
    def grad(ch, z):
        g = np.zeros(ch.dim)
        g[sl] = 2 * z[sl]
        return g

    cas = Observable(lambda ch, z: float(np.sum(z[sl] ** 2)), grad, "|l|^2")
    for idx in range(6):
        assert abs(poisson_bracket(cas, coordinate_observable("l", idx), s)) < 1e-13


@given(kinds, seeds)
def test_bracket_antisymmetry_and_leibniz(kind, seed):
    s = _make(kind, 3, 2, seed)
    c = chart_for(s)
    z = c.to_flat(s)
    F = hamiltonian_observable(1, 2)
    G = hamiltonian_observable(2, 3)
    K = spin_entry_observable(0, 0, 1)
    assert bracket_flat(c, z, F, K) == pytest.approx(-bracket_flat(c, z, K, F), abs=1e-12)
    lhs = bracket_flat(c, z, F * G, K)
    rhs = F(c, z) * bracket_flat(c, z, G, K) + G(c, z) * bracket_flat(c, z, F, K)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
    assert bracket_flat(c, z, F + G, K) == pytest.approx(bracket_flat(c, z, F, K) + bracket_flat(c, z, G, K), abs=1e-10)


@pytest.mark.parametrize("kind", ["periodic", "open"])
def test_jacobi_identity_by_finite_differences(kind, rng):
    s = random_periodic_state(3, 2, rng) if kind == "periodic" else random_open_state(3, 2, rng)
    c = chart_for(s)
    z = c.to_flat(s)
    F, G = spin_entry_observable(0, 0, 1), coordinate_observable("q", 0)
    H = coordinate_observable("l", 0) if kind == "open" else spin_entry_observable(1, 2, 0)
    F = F * coordinate_observable("p", 1)
    total = (
        bracket_flat(c, z, F, bracket_observable(G, H))
        + bracket_flat(c, z, G, bracket_observable(H, F))
        + bracket_flat(c, z, H, bracket_observable(F, G))
    )
    assert abs(total) < 1e-5


def test_analytic_and_fd_gradients_agree(rng):
    s = random_open_state(3, 2, rng)
    F, G = hamiltonian_observable(0, 2), hamiltonian_observable(2, 3)
    a = poisson_bracket(F, spin_entry_observable(1, 0, 2), s)
    b = poisson_bracket(F, spin_entry_observable(1, 0, 2), s, mode="fd")
    assert a == pytest.approx(b, rel=1e-6, abs=1e-8)
    with pytest.raises(ValueError):
        poisson_bracket(F, G, s, units="furlongs")


def test_quadratic_killing_hamiltonian_moves_q_at_velocity_p(rng):
    s = random_open_state(3, 1, rng)
    c = chart_for(s)
    z = c.to_flat(s)
    # (x, x)/2 = N Tr(x^2)
    v = c.poisson_apply(z, 3.0 * c.casimir_grad(z, 1, 2))
    assert np.allclose(v[c.slices["q"]], s.p, atol=1e-12)


def test_chart_validation():
    with pytest.raises(ValueError):
        DarbouxChart("ring", 3, 1, (1.0,))
    with pytest.raises(ValueError):
        DarbouxChart("open", 3, 2, (1.0,))
