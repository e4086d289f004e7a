import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spincm.orbits import (
    ConstraintError,
    KOrbitPoint,
    OrbitSpec,
    RankOneOrbitPoint,
    chain_moment_residual,
    k_normal_form,
    local_spins,
    normalize_gauge,
    rank1_from_matrix,
    sample_constrained,
    sample_k_orbit,
    sample_rank1,
    so_spectrum,
)

seeds = st.integers(0, 2**32 - 1)
xis = st.floats(0.2, 3.0) | st.floats(-3.0, -0.2)


@given(st.integers(2, 5), xis, seeds)
def test_rank1_matrix_is_traceless_with_fixed_casimir(N, xi, seed):
    pt = sample_rank1(N, xi, np.random.default_rng(seed))
    mu = pt.matrix
    assert abs(np.trace(mu)) < 1e-12 * max(1, abs(xi))
    assert np.trace(mu @ mu) == pytest.approx(xi**2 * (1 - 1 / N), rel=1e-12)
    # the shifted matrix has rank one
    sv = np.linalg.svd(mu + xi / N * np.eye(N), compute_uv=False)
    assert sv[1] < 1e-10 * sv[0]


def test_constraint_enforced():
    with pytest.raises(ConstraintError):
        RankOneOrbitPoint(1.0, [1.0, 0.0], [0.5, 0.0])
    with pytest.raises(ConstraintError):
        RankOneOrbitPoint(0.0, [1.0, 0.0], [0.0, 1.0])


@given(seeds)
def test_gauge_normalization_keeps_matrix(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 1.5, 3) * -1
    b = rng.standard_normal(3)
    b += (1.3 - a @ b) / (a @ a) * a
    pt = RankOneOrbitPoint(1.3, 4.0 * a, b / 4.0)
    nrm = normalize_gauge(pt)
    assert np.allclose(nrm.matrix, pt.matrix, atol=1e-12)
    assert np.linalg.norm(nrm.a) == pytest.approx(np.linalg.norm(nrm.b))
    assert nrm.a[0] > 0


@given(st.integers(2, 5), xis, seeds)
def test_rank1_from_matrix_round_trip(N, xi, seed):
    pt = sample_rank1(N, xi, np.random.default_rng(seed))
    back = rank1_from_matrix(pt.matrix, xi)
    assert np.allclose(back.matrix, pt.matrix, atol=1e-10)


def test_rank1_from_matrix_rejects_full_rank():
    with pytest.raises(ConstraintError):
        rank1_from_matrix(np.diag([1.0, -1.0]), 1.0)


@given(st.integers(2, 5), st.integers(1, 4), seeds)
def test_constrained_sampler_hits_zero_cartan_moment(N, n, seed):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.5, 1.5, n)
    spins = sample_constrained(list(xs), N, rng)
    assert np.abs(chain_moment_residual(spins)).max() < 1e-12
    assert [s.xi for s in spins] == pytest.approx(list(xs))


def test_constrained_sampler_accepts_specs(rng):
    spins = sample_constrained([OrbitSpec.rank1(1.0), OrbitSpec.rank1(-2.0)], 3, rng)
    assert [s.xi for s in spins] == [1.0, -2.0]
    with pytest.raises(ConstraintError):
        sample_constrained([1.0, 0.0], 3, rng)


def test_local_spins_pairing_identity(rng):
    # g^(i)_kl g^(j)_lk summed equals mu_ij mu_ji shifted, mu the total spin
    N, n = 4, 3
    spins = sample_constrained([0.7, -1.1, 1.4], N, rng)
    g = local_spins(spins)
    mu = sum(s.matrix for s in spins)
    xi_tot = sum(s.xi for s in spins)
    for i in range(N):
        for j in range(N):
            if i != j:
                lhs = np.trace(g[i] @ g[j])
                assert lhs == pytest.approx(mu[i, j] * mu[j, i] - xi_tot**2 / (N**2 * n), abs=1e-12)


def test_local_spins_needs_constraint(rng):
    with pytest.raises(ConstraintError):
        local_spins([sample_rank1(3, 1.0, rng), sample_rank1(3, 1.0, rng)])


@given(st.integers(2, 6), seeds)
def test_k_orbit_spectrum_preserved(N, seed):
    rng = np.random.default_rng(seed)
    spec = np.sort(rng.uniform(0.1, 2.0, N // 2))[::-1]
    pt = sample_k_orbit(spec, rng, N)
    assert np.allclose(pt.matrix, -pt.matrix.T)
    assert np.allclose(pt.spectrum, spec, atol=1e-12)
    assert np.allclose(so_spectrum(k_normal_form(spec, N)), spec)


def test_k_orbit_validation():
    with pytest.raises(ValueError):
        KOrbitPoint(np.eye(2))
    with pytest.raises(ValueError):
        k_normal_form([1.0, 2.0], 3)
    assert np.all(KOrbitPoint.zero(3).matrix == 0)


def test_orbit_spec_validation():
    with pytest.raises(ValueError):
        OrbitSpec("rank1")
    with pytest.raises(ValueError):
        OrbitSpec("weird", xi=1.0)
    assert OrbitSpec.k_orbit([0.5]).spectrum == (0.5,)
