"""Periodic chain: radial states, reconstruction of the site momenta and Hamiltonians.

Sites are labelled ``1..n`` as in the chain.  Array kernels (``x_matrices`` and
friends) take the stacked spin matrices ``mus`` of shape ``(n, N, N)`` together
with ``p`` and ``q`` and do no validation; they back both the state-level API
and the Darboux-chart code in :mod:`spincm.dynamics`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .liealg import casimir, is_regular, killing_form, min_gap
from .orbits import ConstraintError, chain_moment_residual, sample_constrained, spin_matrix

__all__ = [
    "PeriodicRadialState",
    "RegularityError",
    "x_matrices",
    "x_matrix_vjp",
    "reconstruct_x",
    "felder_r",
    "felder_r_positive",
    "kzb_D",
    "h2_closed_form",
    "h2_from_reconstruction",
    "h2_matrix_units",
    "hamiltonian",
    "random_q",
    "random_periodic_state",
]


class RegularityError(ValueError):
    """The torus coordinate left the regular stratum."""


def _check_vec(v, N, name):
    v = np.array(v, dtype=float)
    if v.shape != (N,):
        raise ValueError(f"{name} must have shape ({N},), got {v.shape}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class PeriodicRadialState:
    """A point of the regular part of the periodic phase space.

    ``spins`` are orbit points (rank-one Darboux points or explicit matrices),
    ``p`` the Cartan momentum and ``q = log a``; both ``p`` and ``q`` sum to zero.
    """

    spins: tuple
    p: np.ndarray
    q: np.ndarray
    reg_eps: float = field(default=1e-8, repr=False)
    tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        spins = tuple(self.spins)
        if not spins:
            raise ValueError("a chain needs at least one site")
        object.__setattr__(self, "spins", spins)
        mats = self.mus
        N = mats.shape[1]
        p = _check_vec(self.p, N, "p")
        q = _check_vec(self.q, N, "q")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        scale = max(1.0, np.abs(p).max(), np.abs(mats).max())
        if abs(p.sum()) > self.tol * scale or abs(q.sum()) > self.tol * max(1.0, np.abs(q).max()):
            raise ValueError("p and q must sum to zero")
        if not is_regular(q, self.reg_eps):
            raise RegularityError(f"q is not regular (min gap {min_gap(q):.3e})")
        resid = chain_moment_residual(spins)
        if np.abs(resid).max() > self.tol * scale:
            raise ConstraintError(f"Cartan moment constraint violated by {np.abs(resid).max():.3e}")

    @property
    def mus(self) -> np.ndarray:
        return np.array([spin_matrix(s) for s in self.spins])

    @property
    def n(self) -> int:
        return len(self.spins)

    @property
    def N(self) -> int:
        return self.p.size

    def replace(self, **kw) -> "PeriodicRadialState":
        args = dict(spins=self.spins, p=self.p, q=self.q, reg_eps=self.reg_eps, tol=self.tol)
        args.update(kw)
        return PeriodicRadialState(**args)


def _torus(q):
    q = np.asarray(q, dtype=float)
    dq = q[:, None] - q[None, :]
    A = np.exp(dq)
    off = ~np.eye(q.size, dtype=bool)
    return A, off


def x_matrices(mus, p, q) -> np.ndarray:
    """All site momenta ``x^(1..n)`` in the gauge ``g = (1, ..., 1, a)``."""
    mus = np.asarray(mus, dtype=float)
    n, N, _ = mus.shape
    A, off = _torus(q)
    denom = np.where(off, A - 1.0, 1.0)
    head = np.cumsum(mus, axis=0)  # mu^(1) + ... + mu^(i)
    total = head[-1]
    tail = total[None] - head  # mu^(i+1) + ... + mu^(n)
    xs = (A[None] * head + tail) / denom[None]
    diag_tail = np.einsum("kii->ki", tail)
    for i in range(n):
        np.fill_diagonal(xs[i], np.asarray(p, dtype=float) - diag_tail[i])
    return xs


def x_matrix_vjp(mus, p, q, i: int, G):
    """Pull back a cotangent ``G = dF/dx^(i)`` (entrywise) to ``(mus, p, q)``.

    Returns ``(dmus, dp, dq)`` with ``dF = sum dmus*dmus_ + dp.dp_ + dq.dq_``.
    """
    mus = np.asarray(mus, dtype=float)
    G = np.asarray(G, dtype=float)
    n, N, _ = mus.shape
    A, off = _torus(q)
    denom = np.where(off, A - 1.0, 1.0)
    Goff = np.where(off, G, 0.0)
    dmus = np.empty_like(mus)
    head_coef = Goff * A / denom
    tail_coef = Goff / denom
    gdiag = np.diag(G)
    for l in range(n):
        if l < i:
            dmus[l] = head_coef
        else:
            dmus[l] = tail_coef
            dmus[l][np.diag_indices(N)] = -gdiag
    dp = gdiag.copy()
    total = mus.sum(axis=0)
    W = np.where(off, Goff * A * total / denom**2, 0.0)
    dq = -W.sum(axis=1) + W.sum(axis=0)
    return dmus, dp, dq


def _need_regular(state):
    if not is_regular(state.q, state.reg_eps):
        raise RegularityError(f"q is not regular (min gap {min_gap(state.q):.3e})")


def reconstruct_x(state: PeriodicRadialState, i: int) -> np.ndarray:
    if not 1 <= i <= state.n:
        raise IndexError(f"site must be in 1..{state.n}, got {i}")
    _need_regular(state)
    return x_matrices(state.mus, state.p, state.q)[i - 1]


def _cartan_pair(N, u, v):
    return 2.0 * N * float(np.dot(u, v))


def felder_r(state: PeriodicRadialState, k: int, l: int) -> float:
    """Classical dynamical r-matrix ``r_kl`` summed over all roots."""
    if k == l:
        raise ValueError("r_kl needs k != l")
    mus = state.mus
    N = state.N
    mk, ml = mus[k - 1], mus[l - 1]
    A, off = _torus(state.q)
    # mu^(k)_{-alpha} mu^(l)_alpha = 2N mk[j,i] ml[i,j] for alpha=(i,j)
    terms = 2.0 * N * mk.T * ml / np.where(off, A - 1.0, 1.0)
    return -0.5 * _cartan_pair(N, np.diag(mk), np.diag(ml)) + float(terms[off].sum())


def felder_r_positive(state: PeriodicRadialState, k: int, l: int) -> float:
    """Same r-matrix written as two sums over positive roots."""
    if k == l:
        raise ValueError("r_kl needs k != l")
    mus = state.mus
    N = state.N
    mk, ml = mus[k - 1], mus[l - 1]
    q = state.q
    s = 2.0 * N
    out = -0.5 * _cartan_pair(N, np.diag(mk), np.diag(ml))
    for i in range(N):
        for j in range(i + 1, N):
            a = np.exp(q[i] - q[j])
            out += s * mk[j, i] * ml[i, j] / (a - 1.0)
            out -= a * s * mk[i, j] * ml[j, i] / (a - 1.0)
    return out


def kzb_D(state: PeriodicRadialState, k: int) -> float:
    """KZB Hamiltonian ``D_k = H2^(k) - H2^(k-1)`` from the r-matrix formula."""
    n = state.n
    if n < 2 or not 2 <= k <= n:
        raise IndexError(f"D_k needs n >= 2 and 2 <= k <= n (n={n}, k={k})")
    _need_regular(state)
    mus = state.mus
    out = _cartan_pair(state.N, np.diag(mus[k - 1]), state.p)
    out -= sum(felder_r(state, l, k) for l in range(1, k))
    out += sum(felder_r(state, k, l) for l in range(k + 1, n + 1))
    return out


def h2_closed_form(state: PeriodicRadialState) -> float:
    """Spin Calogero-Moser Hamiltonian ``H2^(n)`` (Killing normalization).

    ``(p, p)/2 - sum_{alpha>0} mu_alpha mu_-alpha / (4 sh^2(q_alpha / 2))`` with
    ``mu`` the total spin; this is ``(x^(n), x^(n))/2`` written out, since
    ``(a - 1)(a^-1 - 1) = -4 sh^2(q/2)`` for ``a = e^q``.
    """
    _need_regular(state)
    N = state.N
    mu = state.mus.sum(axis=0)
    q = state.q
    out = 0.5 * _cartan_pair(N, state.p, state.p)
    for i in range(N):
        for j in range(i + 1, N):
            # mu_alpha mu_-alpha in root coordinates
            out -= 2.0 * N * mu[i, j] * mu[j, i] / (4.0 * np.sinh(0.5 * (q[i] - q[j])) ** 2)
    return out


def h2_from_reconstruction(state: PeriodicRadialState, k: int | None = None) -> float:
    k = state.n if k is None else k
    x = reconstruct_x(state, k)
    return 0.5 * killing_form(x, x)


def h2_matrix_units(state: PeriodicRadialState) -> float:
    """``H2^(n) / (2N)``: ``sum p_i^2 / 2 - sum_{i<j} mu_ij mu_ji / (4 sh^2((q_i - q_j)/2))``."""
    mu = state.mus.sum(axis=0)
    q = state.q
    iu = np.triu_indices(state.N, 1)
    dq = (q[:, None] - q[None, :])[iu]
    return 0.5 * float(state.p @ state.p) - float(np.sum(mu[iu] * mu.T[iu] / (4.0 * np.sinh(0.5 * dq) ** 2)))


def hamiltonian(state: PeriodicRadialState, k: int, d: int) -> float:
    """``Tr((x^(k))^d)``, the degree-d Casimir of the k-th site momentum."""
    if not 1 <= k <= state.n:
        raise IndexError(f"site must be in 1..{state.n}, got {k}")
    if not 2 <= d <= state.N:
        raise ValueError(f"degree must satisfy 2 <= d <= N={state.N}, got {d}")
    return casimir(d, reconstruct_x(state, k))


def hamiltonian_family(state: PeriodicRadialState) -> dict[tuple[int, int], float]:
    return {(k, d): hamiltonian(state, k, d) for k in range(1, state.n + 1) for d in range(2, state.N + 1)}


def site_labels(n: int) -> Sequence[int]:
    return range(1, n + 1)


def random_q(N: int, rng: np.random.Generator, gap=(0.4, 1.2)) -> np.ndarray:
    """Centered, strictly decreasing torus coordinate with spacings drawn from ``gap``."""
    steps = rng.uniform(gap[0], gap[1], N - 1)
    q = -np.concatenate([[0.0], np.cumsum(steps)])
    return q - q.mean()


def random_periodic_state(
    N: int,
    n: int,
    rng: np.random.Generator,
    xis: Sequence[float] | None = None,
    p_scale: float = 1.0,
    spread: float = 0.5,
    gap=(0.4, 1.2),
) -> PeriodicRadialState:
    """Unit-scale random regular state with rank-one spins."""
    if xis is None:
        xis = rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n)
    spins = sample_constrained(list(xis), N, rng, spread=spread)
    p = p_scale * rng.standard_normal(N)
    return PeriodicRadialState(spins, p - p.mean(), random_q(N, rng, gap))
