"""Open chain: boundary coefficients, reconstruction of ``x^(0..n)`` and bKZB Hamiltonians.

The two boundary points ``mu_left`` and ``mu_right`` are antisymmetric
matrices (points of so(N)*).  For an antisymmetric matrix ``L`` the bracketed
coordinate is ``L_[alpha] = sqrt(2N) (L_ij - L_ji) = 2 sqrt(2N) L_ij``, so in
matrix entries the boundary term of ``x^(k)_ij`` reads
``2 (a L_ij + R_ij) / (a - 1/a)`` with ``a = exp(q_i - q_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .liealg import casimir, is_regular, k_coordinate, killing_form, min_gap
from .orbits import KOrbitPoint, sample_k_orbit, sample_rank1, spin_matrix
from .periodic import RegularityError, _check_vec, random_q

__all__ = [
    "OpenRadialState",
    "x_open_matrices",
    "x_open_vjp",
    "boundary_K",
    "reconstruct_x_open",
    "extremes",
    "felder_r_rescaled",
    "theta_twist_r",
    "kappa",
    "bkzb_D",
    "h2_open_closed",
    "h2_open_from_reconstruction",
    "hamiltonian_open",
    "hamiltonian_family_open",
    "random_open_state",
]


def _antisym(m, name):
    if isinstance(m, KOrbitPoint):
        return np.array(m.matrix)
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if np.abs(m + m.T).max() > 1e-12 * max(1.0, np.abs(m).max()):
        raise ValueError(f"{name} must be antisymmetric")
    return m


@dataclass(frozen=True, eq=False)
class OpenRadialState:
    """A point of the regular part of the open-chain phase space.

    No Cartan constraint binds the spins here: every Cartan part of
    ``x^(k)`` is fixed by ``p = x_0^(n)`` and the spins.
    """

    mu_left: KOrbitPoint
    spins: tuple
    mu_right: KOrbitPoint
    p: np.ndarray
    q: np.ndarray
    reg_eps: float = field(default=1e-8, repr=False)
    tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        spins = tuple(self.spins)
        object.__setattr__(self, "spins", spins)
        ml = self.mu_left if isinstance(self.mu_left, KOrbitPoint) else KOrbitPoint(self.mu_left)
        mr = self.mu_right if isinstance(self.mu_right, KOrbitPoint) else KOrbitPoint(self.mu_right)
        object.__setattr__(self, "mu_left", ml)
        object.__setattr__(self, "mu_right", mr)
        N = ml.N
        if mr.N != N:
            raise ValueError(f"boundary sizes differ: {ml.N} vs {mr.N}")
        for s in spins:
            if spin_matrix(s).shape != (N, N):
                raise ValueError(f"spin size does not match N={N}")
        p = _check_vec(self.p, N, "p")
        q = _check_vec(self.q, N, "q")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if abs(p.sum()) > self.tol * max(1.0, np.abs(p).max()) or abs(q.sum()) > self.tol * max(
            1.0, np.abs(q).max()
        ):
            raise ValueError("p and q must sum to zero")
        if not is_regular(q, self.reg_eps):
            raise RegularityError(f"q is not regular (min gap {min_gap(q):.3e})")

    @property
    def mus(self) -> np.ndarray:
        if not self.spins:
            return np.zeros((0, self.N, self.N))
        return np.array([spin_matrix(s) for s in self.spins])

    @property
    def L(self) -> np.ndarray:
        return np.array(self.mu_left.matrix)

    @property
    def R(self) -> np.ndarray:
        return np.array(self.mu_right.matrix)

    @property
    def n(self) -> int:
        return len(self.spins)

    @property
    def N(self) -> int:
        return self.p.size

    def replace(self, **kw) -> "OpenRadialState":
        args = dict(
            mu_left=self.mu_left,
            spins=self.spins,
            mu_right=self.mu_right,
            p=self.p,
            q=self.q,
            reg_eps=self.reg_eps,
            tol=self.tol,
        )
        args.update(kw)
        return OpenRadialState(**args)


def _torus(q):
    q = np.asarray(q, dtype=float)
    A = np.exp(q[:, None] - q[None, :])
    off = ~np.eye(q.size, dtype=bool)
    delta = np.where(off, A - 1.0 / A, 1.0)
    return A, off, delta


def x_open_matrices(L, mus, R, p, q) -> np.ndarray:
    """All site momenta ``x^(0..n)``, shape ``(n+1, N, N)``; no validation."""
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    mus = np.asarray(mus, dtype=float).reshape(-1, L.shape[0], L.shape[0])
    n = mus.shape[0]
    A, off, delta = _torus(q)
    zero = np.zeros_like(L)
    head = np.concatenate([zero[None], np.cumsum(mus, axis=0)], axis=0)  # sum_{l<=k}
    total = head[-1]
    tail = total[None] - head  # sum_{l>k}
    bnd = 2.0 * (A * L + R)
    xs = (bnd[None] + A * (head - np.swapaxes(head, 1, 2)) + tail / A - A * np.swapaxes(tail, 1, 2)) / delta
    p = np.asarray(p, dtype=float)
    diag_tail = np.einsum("kii->ki", tail)
    for k in range(n + 1):
        np.fill_diagonal(xs[k], p - diag_tail[k])
    return xs


def x_open_vjp(L, mus, R, p, q, k: int, G):
    """Pull back an entrywise cotangent ``G = dF/dx^(k)``.

    Returns ``(dL, dmus, dR, dp, dq)``; ``dL`` and ``dR`` are entrywise
    gradients treating every matrix entry as independent.
    """
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    N = L.shape[0]
    mus = np.asarray(mus, dtype=float).reshape(-1, N, N)
    n = mus.shape[0]
    G = np.asarray(G, dtype=float)
    A, off, delta = _torus(q)
    Goff = np.where(off, G, 0.0)
    C = Goff / delta
    AC = A * C
    dL = 2.0 * AC
    dR = 2.0 * C
    gdiag = np.diag(G).copy()
    dmus = np.empty_like(mus)
    for l in range(n):
        if l < k:  # site l+1 <= k
            dmus[l] = AC - AC.T
        else:
            dmus[l] = C / A - AC.T
            dmus[l][np.diag_indices(N)] = -gdiag
    s_le = mus[:k].sum(axis=0)
    s_gt = mus[k:].sum(axis=0)
    num = 2.0 * (A * L + R) + A * (s_le - s_le.T) - A * s_gt.T + s_gt / A
    dnum = 2.0 * L + s_le - s_le.T - s_gt.T - s_gt / A**2
    dx_dA = (dnum * delta - num * (1.0 + 1.0 / A**2)) / delta**2
    W = np.where(off, Goff * dx_dA * A, 0.0)
    dq = W.sum(axis=1) - W.sum(axis=0)
    return dL, dmus, dR, gdiag, dq


def _need_regular(state):
    if not is_regular(state.q, state.reg_eps):
        raise RegularityError(f"q is not regular (min gap {min_gap(state.q):.3e})")


def boundary_K(state: OpenRadialState, root: tuple[int, int]) -> float:
    """``K_alpha = (a_alpha mu'_[alpha] + mu''_[alpha]) / (a_alpha - 1/a_alpha)``."""
    i, j = root
    if i == j:
        raise ValueError("diagonal index pair is not a root")
    a = np.exp(state.q[i] - state.q[j])
    if abs(a * a - 1.0) <= state.reg_eps:
        raise RegularityError(f"a_alpha^2 = 1 for root {root}")
    lp = k_coordinate(state.L, root)
    lpp = k_coordinate(state.R, root)
    return (a * lp + lpp) / (a - 1.0 / a)


def reconstruct_x_open(state: OpenRadialState, k: int) -> np.ndarray:
    if not 0 <= k <= state.n:
        raise IndexError(f"site must be in 0..{state.n}, got {k}")
    _need_regular(state)
    return x_open_matrices(state.L, state.mus, state.R, state.p, state.q)[k]


def extremes(state: OpenRadialState) -> tuple[np.ndarray, np.ndarray]:
    """``(x^(0), x^(n))`` from the boundary solution written with the total spin only.

    Root coordinates are assembled one root at a time; used as a cross-check
    of :func:`reconstruct_x_open`.
    """
    _need_regular(state)
    N = state.N
    s = np.sqrt(2.0 * N)
    mu = state.mus.sum(axis=0) if state.n else np.zeros((N, N))
    x0 = np.zeros((N, N))
    xn = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            a = np.exp(state.q[i] - state.q[j])
            lp = k_coordinate(state.L, (i, j))
            lpp = k_coordinate(state.R, (i, j))
            m_a, m_ma = s * mu[i, j], s * mu[j, i]
            x0[i, j] = (a * lp + lpp + (m_a / a - a * m_ma)) / (a - 1.0 / a) / s
            xn[i, j] = (a * lp + lpp + (a * m_a - a * m_ma)) / (a - 1.0 / a) / s
    np.fill_diagonal(xn, state.p)
    np.fill_diagonal(x0, state.p - np.diag(mu))
    return x0, xn


def _pair0(N, u, v):
    return 2.0 * N * float(np.dot(u, v))


def _a2(state):
    A = np.exp(state.q[:, None] - state.q[None, :])
    off = ~np.eye(state.N, dtype=bool)
    return A * A, off


def felder_r_rescaled(state: OpenRadialState, k: int, l: int) -> float:
    """``r_kl = -(mu0^k, mu0^l)/2 + sum_alpha mu^k_-alpha mu^l_alpha / (a_alpha^2 - 1)``."""
    if k == l:
        raise ValueError("r_kl needs k != l")
    mus = state.mus
    N = state.N
    mk, ml = mus[k - 1], mus[l - 1]
    A2, off = _a2(state)
    terms = 2.0 * N * mk.T * ml / np.where(off, A2 - 1.0, 1.0)
    return -0.5 * _pair0(N, np.diag(mk), np.diag(ml)) + float(terms[off].sum())


def theta_twist_r(state: OpenRadialState, k: int, l: int) -> float:
    """``r^theta_kl = (mu0^k, mu0^l)/2 - sum_alpha mu^k_alpha mu^l_alpha / (a_alpha^2 - 1)``."""
    if k == l:
        raise ValueError("r^theta_kl needs k != l")
    mus = state.mus
    N = state.N
    mk, ml = mus[k - 1], mus[l - 1]
    A2, off = _a2(state)
    terms = 2.0 * N * mk * ml / np.where(off, A2 - 1.0, 1.0)
    return 0.5 * _pair0(N, np.diag(mk), np.diag(ml)) - float(terms[off].sum())


def kappa(state: OpenRadialState, k: int) -> float:
    """``kappa_k = (mu0^k, mu0^k)/2 + sum_alpha (mu^k_alpha)^2 / (1 - a_alpha^2)``."""
    mk = state.mus[k - 1]
    N = state.N
    A2, off = _a2(state)
    terms = 2.0 * N * mk * mk / np.where(off, 1.0 - A2, 1.0)
    return 0.5 * _pair0(N, np.diag(mk), np.diag(mk)) + float(terms[off].sum())


def bkzb_D(state: OpenRadialState, k: int) -> float:
    """bKZB Hamiltonian ``D_k = H2^(k) - H2^(k-1)``, ``1 <= k <= n``, from the r/kappa formula."""
    n = state.n
    if not 1 <= k <= n:
        raise IndexError(f"D_k needs 1 <= k <= n (n={n}, k={k})")
    _need_regular(state)
    N = state.N
    mk = state.mus[k - 1]
    out = _pair0(N, np.diag(mk), state.p)
    for l in range(1, k):
        out -= felder_r_rescaled(state, l, k) + theta_twist_r(state, l, k)
    bsum = 0.0
    s = np.sqrt(2.0 * N)
    for i in range(N):
        for j in range(N):
            if i != j:
                bsum += boundary_K(state, (i, j)) * s * mk[j, i]
    out += bsum - kappa(state, k)
    for l in range(k + 1, n + 1):
        out += felder_r_rescaled(state, k, l) - theta_twist_r(state, k, l)
    return out


def h2_open_closed(state: OpenRadialState) -> float:
    """Closed form of ``H2^(n)``; the potential sees the spins only through ``pi(mu)``."""
    _need_regular(state)
    N = state.N
    s = np.sqrt(2.0 * N)
    mu = state.mus.sum(axis=0) if state.n else np.zeros((N, N))
    out = 0.5 * _pair0(N, state.p, state.p)
    for i in range(N):
        for j in range(i + 1, N):
            a = np.exp(state.q[i] - state.q[j])
            lp = k_coordinate(state.L, (i, j))
            lpp = k_coordinate(state.R, (i, j))
            d = s * (mu[i, j] - mu[j, i])
            out += (a * lp + lpp + a * d) * (lp / a + lpp + d / a) / (a - 1.0 / a) ** 2
    return out


def h2_open_from_reconstruction(state: OpenRadialState, k: int | None = None) -> float:
    k = state.n if k is None else k
    x = reconstruct_x_open(state, k)
    return 0.5 * killing_form(x, x)


def hamiltonian_open(state: OpenRadialState, k: int, d: int) -> float:
    """``Tr((x^(k))^d)`` for ``0 <= k <= n``."""
    if not 0 <= k <= state.n:
        raise IndexError(f"site must be in 0..{state.n}, got {k}")
    if not 2 <= d <= state.N:
        raise ValueError(f"degree must satisfy 2 <= d <= N={state.N}, got {d}")
    return casimir(d, reconstruct_x_open(state, k))


def hamiltonian_family_open(state: OpenRadialState) -> dict[tuple[int, int], float]:
    return {(k, d): hamiltonian_open(state, k, d) for k in range(0, state.n + 1) for d in range(2, state.N + 1)}


def random_open_state(
    N: int,
    n: int,
    rng: np.random.Generator,
    xis=None,
    boundary: bool = True,
    p_scale: float = 1.0,
    gap=(0.4, 1.2),
) -> OpenRadialState:
    """Unit-scale random regular state; ``boundary=False`` puts both boundary points at zero."""
    if xis is None:
        xis = rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n)
    spins = [sample_rank1(N, xi, rng) for xi in xis]
    if boundary and N >= 2:
        L = sample_k_orbit(rng.uniform(0.2, 1.0, N // 2), rng, N)
        R = sample_k_orbit(rng.uniform(0.2, 1.0, N // 2), rng, N)
    else:
        L = R = KOrbitPoint.zero(N)
    p = p_scale * rng.standard_normal(N)
    return OpenRadialState(L, spins, R, p - p.mean(), random_q(N, rng, gap))
