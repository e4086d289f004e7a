import numpy as np
import pytest

from spincm.dynamics.angles import (
    AngleError,
    angle,
    angle_slope,
    assert_m_invariant,
    diagonalizer,
    rotation_diagonalizer,
    sign_group,
    track_angle,
)
from spincm.dynamics.extended import embed_extended, flow_extended, gauge_transform, random_gauge
from spincm.liealg import random_algebra
from spincm.openchain import random_open_state
from spincm.periodic import random_periodic_state


def _ready(kind, N, n, seed, **kw):
    """A state whose angle and flows are all defined (real simple spectra)."""
    rng = np.random.default_rng(seed)
    for _ in range(50):
        if kind == "periodic":
            s = random_periodic_state(N, n, rng, p_scale=2.0)
            js = rng.integers(0, N, n)
        else:
            s = random_open_state(N, n, rng, p_scale=2.0, **kw)
            js = rng.integers(0, N, n + 2)
        es = embed_extended(s)
        try:
            angle(es, js)
            for i in range(1, n + 1):
                for d in range(2, N + 1):
                    angle_slope(es, i, d, js)
            return es, js, rng
        except AngleError:
            continue
    raise RuntimeError("no admissible state")


def test_diagonalizer(rng):
    x = np.diag([3.0, -1.0, -2.0]) + 0.1 * random_algebra(3, rng)
    s, lam = diagonalizer(x)
    assert np.linalg.det(s) == pytest.approx(1.0)
    assert np.all(np.diff(lam) < 0)
    assert np.allclose(s @ x @ np.linalg.inv(s), np.diag(lam), atol=1e-12)


def test_diagonalizer_rejects_complex_and_degenerate():
    with pytest.raises(AngleError):
        diagonalizer(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    with pytest.raises(AngleError):
        diagonalizer(np.zeros((3, 3)))


def test_rotation_diagonalizer(rng):
    x = random_algebra(4, rng)
    k, lam = rotation_diagonalizer(x)
    assert np.allclose(k @ k.T, np.eye(4)) and np.linalg.det(k) == pytest.approx(1.0)
    assert np.allclose(k @ (0.5 * (x + x.T)) @ k.T, np.diag(lam), atol=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_sign_group_and_m_invariance(N):
    g = sign_group(N)
    assert g.shape == (2 ** (N - 1), N)
    assert np.all(np.prod(g, axis=1) == 1.0)
    assert len({tuple(r) for r in g}) == 2 ** (N - 1)
    for j in range(N):
        assert_m_invariant(j, N)


@pytest.mark.parametrize("kind,N,n", [("periodic", 3, 2), ("periodic", 2, 3), ("open", 3, 2), ("open", 2, 1)])
def test_log_angle_is_linear_in_time(kind, N, n):
    es, js, _ = _ready(kind, N, n, seed=N * 10 + n)
    f0 = angle(es, js)
    for site in range(1, n + 1):
        for d in range(2, N + 1):
            slope = angle_slope(es, site, d, js)
            for t in np.linspace(0, 0.3, 7):
                f = angle(flow_extended(es, site, d, t), js)
                assert f.log_abs - f0.log_abs == pytest.approx(t * slope, abs=1e-9)


@pytest.mark.parametrize("kind", ["periodic", "open"])
def test_angle_is_gauge_invariant(kind):
    es, js, rng = _ready(kind, 3, 2, seed=3)
    moved = gauge_transform(es, random_gauge(es, rng))
    assert angle(moved, js).log_abs == pytest.approx(angle(es, js).log_abs, abs=1e-9)


def test_site_zero_flow_needs_symmetric_x0():
    es, js, _ = _ready("open", 3, 1, seed=5, boundary=True)
    with pytest.raises(AngleError):
        angle_slope(es, 0, 2, js)
    es0, js0, _ = _ready("open", 3, 1, seed=5, boundary=False)
    slope = angle_slope(es0, 0, 2, js0)
    f0 = angle(es0, js0).log_abs
    assert angle(flow_extended(es0, 0, 2, 0.2), js0).log_abs - f0 == pytest.approx(0.2 * slope, abs=1e-9)


def test_track_angle_and_weights():
    es, js, _ = _ready("periodic", 3, 2, seed=1)
    logs, signs, crossed = track_angle([flow_extended(es, 1, 2, t) for t in (0.0, 0.1, 0.2)], js)
    assert logs.shape == (3,) and not crossed
    with pytest.raises(ValueError):
        angle(es, [0])
    with pytest.raises(ValueError):
        angle(es, [0, 7])
