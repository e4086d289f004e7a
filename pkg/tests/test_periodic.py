import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spincm.liealg import killing_form
from spincm.orbits import ConstraintError, RankOneOrbitPoint, sample_rank1
from spincm.periodic import (
    PeriodicRadialState,
    RegularityError,
    felder_r,
    felder_r_positive,
    h2_closed_form,
    h2_from_reconstruction,
    h2_matrix_units,
    hamiltonian,
    hamiltonian_family,
    kzb_D,
    random_periodic_state,
    reconstruct_x,
    x_matrices,
)

seeds = st.integers(0, 2**32 - 1)
shape = st.tuples(st.integers(2, 5), st.integers(1, 4))


def _state(seed, N, n):
    return random_periodic_state(N, n, np.random.default_rng(seed))


@given(shape, seeds)
def test_site_momenta_satisfy_moment_equations(Nn, seed):
    N, n = Nn
    s = _state(seed, N, n)
    xs = x_matrices(s.mus, s.p, s.q)
    a = np.diag(np.exp(s.q))
    # x^(1) - Ad_{a^-1} x^(n) = mu^(1), x^(i) - x^(i-1) = mu^(i)
    first = xs[0] - np.linalg.inv(a) @ xs[-1] @ a
    assert np.allclose(first, s.mus[0], atol=1e-10)
    for i in range(1, n):
        assert np.allclose(xs[i] - xs[i - 1], s.mus[i], atol=1e-10)
    assert np.allclose(np.diag(xs[-1]), s.p, atol=1e-12)


@given(shape, seeds)
def test_h2_closed_form_matches_reconstruction(Nn, seed):
    s = _state(seed, *Nn)
    h = h2_from_reconstruction(s)
    assert h2_closed_form(s) == pytest.approx(h, rel=1e-10, abs=1e-10)
    assert h2_matrix_units(s) == pytest.approx(h / (2 * s.N), rel=1e-10, abs=1e-10)


def test_n1_n2_h2_by_hand():
    # N = 2, one spin: H/(2N) = p^2 - mu12 mu21 / (4 sh^2(q))
    a, b = np.array([1.0, 0.5]), np.array([0.25, 0.5])
    sp = RankOneOrbitPoint(0.5, a, b)
    s = PeriodicRadialState([sp], [0.3, -0.3], [0.4, -0.4])
    mu = sp.matrix
    expect = 0.3**2 - mu[0, 1] * mu[1, 0] / (4 * np.sinh(0.4) ** 2)
    assert h2_matrix_units(s) == pytest.approx(expect, rel=1e-13)


@given(st.tuples(st.integers(2, 5), st.integers(2, 4)), seeds)
def test_felder_r_two_forms_agree(Nn, seed):
    s = _state(seed, *Nn)
    for k in range(1, s.n + 1):
        for l in range(1, s.n + 1):
            if k != l:
                assert felder_r(s, k, l) == pytest.approx(felder_r_positive(s, k, l), rel=1e-10, abs=1e-10)


@given(st.tuples(st.integers(2, 5), st.integers(2, 4)), seeds)
def test_kzb_is_difference_of_consecutive_casimirs(Nn, seed):
    s = _state(seed, *Nn)
    H = [h2_from_reconstruction(s, k) for k in range(1, s.n + 1)]
    for k in range(2, s.n + 1):
        assert kzb_D(s, k) == pytest.approx(H[k - 1] - H[k - 2], rel=1e-9, abs=1e-9)


def test_kzb_index_checks(rng):
    s = random_periodic_state(3, 2, rng)
    with pytest.raises(IndexError):
        kzb_D(s, 1)
    with pytest.raises(ValueError):
        felder_r(s, 1, 1)


def test_hamiltonians_gauge_invariant_in_spin_scaling(rng):
    s = random_periodic_state(3, 2, rng)
    rescaled = [RankOneOrbitPoint(sp.xi, 3.0 * sp.a, sp.b / 3.0) for sp in s.spins]
    t = s.replace(spins=rescaled)
    for key, val in hamiltonian_family(s).items():
        assert hamiltonian(t, *key) == pytest.approx(val, rel=1e-12)


def test_hamiltonian_is_trace_power(rng):
    s = random_periodic_state(4, 2, rng)
    x = reconstruct_x(s, 2)
    assert hamiltonian(s, 2, 3) == pytest.approx(np.trace(x @ x @ x))
    assert killing_form(x, x) == pytest.approx(2 * 4 * hamiltonian(s, 2, 2))
    with pytest.raises(ValueError):
        hamiltonian(s, 1, 5)
    with pytest.raises(IndexError):
        reconstruct_x(s, 3)


def test_state_validation(rng):
    s = random_periodic_state(3, 2, rng)
    with pytest.raises(RegularityError):
        s.replace(q=np.array([0.5, 0.5, -1.0]))
    with pytest.raises(ValueError):
        s.replace(p=np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ConstraintError):
        s.replace(spins=[sample_rank1(3, 1.0, rng), sample_rank1(3, 1.0, rng)])
