"""Unreduced phase space ``(x, g)`` and the exact projection method.

Periodic chains carry ``n`` pairs ``(x_i, g_i)``, open chains ``n + 1`` pairs
``(x_0..x_n, g_0..g_n)``.  A Hamiltonian ``c_d(x_i)`` moves only ``g_i``, by
left multiplication with ``exp(t grad c_d(x_i))``; the reduced flow is read
off by gauge fixing back to radial coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..liealg import adjoint_star, gradient_invariant, project_k
from ..openchain import OpenRadialState, x_open_matrices
from ..orbits import KOrbitPoint, RankOneOrbitPoint, rank1_from_matrix, spin_matrix
from ..periodic import PeriodicRadialState, RegularityError, x_matrices

__all__ = [
    "ExtendedState",
    "GaugeFixError",
    "embed_extended",
    "flow_extended",
    "gauge_fix",
    "gauge_fix_periodic",
    "gauge_fix_open",
    "gauge_transform",
    "random_gauge",
    "moment_map",
    "canonical_form",
    "radial_distance",
]


class GaugeFixError(ValueError):
    """The group data left the regular set (complex, repeated or non-positive spectrum)."""


@dataclass(frozen=True, eq=False)
class ExtendedState:
    kind: str
    x: np.ndarray  # (m, N, N)
    g: np.ndarray  # (m, N, N)

    def __post_init__(self):
        if self.kind not in ("periodic", "open"):
            raise ValueError(f"kind must be 'periodic' or 'open', got {self.kind!r}")
        x = np.array(self.x, dtype=float)
        g = np.array(self.g, dtype=float)
        if x.ndim != 3 or x.shape != g.shape or x.shape[1] != x.shape[2]:
            raise ValueError(f"x and g must be stacks of equal square matrices, got {x.shape}, {g.shape}")
        x.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "g", g)

    @property
    def N(self) -> int:
        return self.x.shape[1]

    @property
    def n(self) -> int:
        return self.x.shape[0] if self.kind == "periodic" else self.x.shape[0] - 1

    def site(self, i: int) -> int:
        """Array index of chain site ``i`` (1-based periodic, 0-based open)."""
        j = i - 1 if self.kind == "periodic" else i
        if not 0 <= j < self.x.shape[0]:
            raise IndexError(f"site {i} out of range for a {self.kind} chain with n={self.n}")
        return j


def embed_extended(state) -> ExtendedState:
    """A representative ``(x, g)`` with ``g = (1, ..., 1, a)``.

    For the periodic chain the site momenta are ``x_i = Ad_a x^(i)`` so that
    the monodromy-based gauge fixing returns ``x^(i)`` exactly.
    """
    N = state.N
    a = np.diag(np.exp(state.q))
    if isinstance(state, PeriodicRadialState):
        xs = x_matrices(state.mus, state.p, state.q)
        ainv = np.diag(np.exp(-state.q))
        xs = np.array([a @ x @ ainv for x in xs])
        kind = "periodic"
    elif isinstance(state, OpenRadialState):
        xs = x_open_matrices(state.L, state.mus, state.R, state.p, state.q)
        kind = "open"
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    g = np.repeat(np.eye(N)[None], xs.shape[0], axis=0)
    g[-1] = a
    return ExtendedState(kind, xs, g)


def flow_extended(es: ExtendedState, site: int, d: int, t: float) -> ExtendedState:
    j = es.site(site)
    gen = gradient_invariant(d, es.x[j])
    g = np.array(es.g)
    g[j] = expm(t * gen) @ g[j]
    return ExtendedState(es.kind, es.x, g)


def moment_map(es: ExtendedState):
    """Gauge moment map: per-site spins (periodic) or ``(pi(x_0), spins, -pi(Ad_{g_n^-1} x_n))`` (open)."""
    x, g = es.x, es.g
    if es.kind == "periodic":
        n = x.shape[0]
        return np.array([x[i] - adjoint_star(np.linalg.inv(g[i - 1]), x[i - 1]) for i in range(n)])
    n = es.n
    spins = np.array([x[i] - adjoint_star(np.linalg.inv(g[i - 1]), x[i - 1]) for i in range(1, n + 1)])
    left = project_k(x[0])
    right = -project_k(adjoint_star(np.linalg.inv(g[n]), x[n]))
    return left, spins.reshape(n, es.N, es.N), right


def gauge_transform(es: ExtendedState, h) -> ExtendedState:
    """Apply a gauge group element.

    Periodic: ``h = (h_1..h_n)``, ``g_i -> h_i g_i h_{i+1}^-1`` cyclically.
    Open: ``h = (k_l, h_1..h_n, k_r)`` with ``k_l, k_r`` rotations.
    """
    h = np.asarray(h, dtype=float)
    x, g = es.x, es.g
    if es.kind == "periodic":
        n = x.shape[0]
        if h.shape[0] != n:
            raise ValueError(f"need {n} gauge elements, got {h.shape[0]}")
        hinv = np.linalg.inv(h)
        xs = np.array([adjoint_star(h[i], x[i]) for i in range(n)])
        gs = np.array([h[i] @ g[i] @ hinv[(i + 1) % n] for i in range(n)])
        return ExtendedState("periodic", xs, gs)
    m = x.shape[0]
    if h.shape[0] != m + 1:
        raise ValueError(f"need {m + 1} gauge elements (k_l, h_1..h_n, k_r), got {h.shape[0]}")
    hinv = np.linalg.inv(h)
    xs = np.array([adjoint_star(h[i], x[i]) for i in range(m)])
    gs = np.array([h[i] @ g[i] @ hinv[i + 1] for i in range(m)])
    return ExtendedState("open", xs, gs)


def random_gauge(es: ExtendedState, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    from ..liealg import random_group, random_rotation

    N = es.N
    if es.kind == "periodic":
        return np.array([random_group(N, rng, scale) for _ in range(es.n)])
    inner = [random_group(N, rng, scale) for _ in range(es.n)]
    return np.array([random_rotation(N, rng)] + inner + [random_rotation(N, rng)])


def _spins_out(mus, template, tol):
    out = []
    for k, mu in enumerate(mus):
        ref = template[k] if template is not None else None
        if isinstance(ref, RankOneOrbitPoint):
            out.append(rank1_from_matrix(mu, ref.xi, tol=tol))
        else:
            out.append(mu)
    return tuple(out)


def gauge_fix_periodic(es: ExtendedState, template=None, reg_eps: float = 1e-8, tol: float = 1e-7):
    """Radial point of a periodic extended state (gauge fixing through the monodromy).

    ``template`` (a radial state or a spin sequence) decides whether spins come
    back as rank-one ``(a, b)`` points; otherwise plain matrices are returned.
    """
    if es.kind != "periodic":
        raise ValueError("gauge_fix_periodic needs a periodic extended state")
    x, g = es.x, es.g
    n, N = x.shape[0], es.N
    # suffix products g_j ... g_n
    suffix = [None] * n
    acc = np.eye(N)
    for j in range(n - 1, -1, -1):
        acc = g[j] @ acc
        suffix[j] = acc
    m = suffix[0]
    w, V = np.linalg.eig(m)
    if np.abs(w.imag).max() > 1e-10 * np.abs(w).max() or np.any(w.real <= 0):
        raise GaugeFixError(f"monodromy spectrum is not real positive: {w}")
    w = w.real
    V = V.real
    order = np.argsort(-w)
    w, V = w[order], V[:, order]
    q = np.log(w)
    q = q - q.mean()
    if np.min(-np.diff(q)) <= reg_eps * max(1.0, np.abs(q).max()):
        raise RegularityError(f"monodromy eigenvalues are not distinct: {w}")
    Bm = _frame(V)
    z = [np.linalg.solve(suffix[j], x[j] @ suffix[j]) for j in range(n)]  # Ad_{(g_j..g_n)^-1} x_j
    xr = [np.linalg.solve(Bm, zj @ Bm) for zj in z]
    a = np.exp(q)
    mus = [xr[0] - (xr[-1] * a[None, :] / a[:, None])] + [xr[i] - xr[i - 1] for i in range(1, n)]
    p = np.diag(xr[-1]).copy()
    p -= p.mean()
    spins = _spins_out(mus, _template_spins(template), tol)
    return PeriodicRadialState(spins, p, q, reg_eps=reg_eps, tol=tol)


def _frame(V) -> np.ndarray:
    """Deterministic eigenvector frame: largest-magnitude entry of each column positive, det 1."""
    V = np.array(V, dtype=float)
    V = V / np.linalg.norm(V, axis=0)
    for c in range(V.shape[1]):
        if V[np.argmax(np.abs(V[:, c])), c] < 0:
            V[:, c] = -V[:, c]
    det = np.linalg.det(V)
    V[:, -1] /= det
    return V


def _template_spins(template):
    if template is None:
        return None
    if hasattr(template, "spins"):
        return template.spins
    return tuple(template)


def gauge_fix_open(es: ExtendedState, template=None, reg_eps: float = 1e-8, tol: float = 1e-7):
    """Radial point of an open extended state via the singular value decomposition of ``g_0...g_n``."""
    if es.kind != "open":
        raise ValueError("gauge_fix_open needs an open extended state")
    x, g = es.x, es.g
    m, N = x.shape[0], es.N
    prefix = np.eye(N)
    ys = []
    for i in range(m):
        ys.append(prefix @ x[i] @ np.linalg.inv(prefix) if i else np.array(x[0]))
        prefix = prefix @ g[i]
    U, S, Vt = np.linalg.svd(prefix)
    if np.linalg.det(U) < 0:
        U[:, 0] = -U[:, 0]
        Vt[0] = -Vt[0]
    q = np.log(S)
    q = q - q.mean()
    if np.min(-np.diff(q)) <= reg_eps * max(1.0, np.abs(q).max()):
        raise RegularityError(f"singular values are not distinct: {S}")
    xr = [U.T @ y @ U for y in ys]
    a = np.exp(q)
    L = project_k(xr[0])
    R = -project_k(xr[-1] * a[None, :] / a[:, None])
    mus = [xr[i] - xr[i - 1] for i in range(1, m)]
    p = np.diag(xr[-1]).copy()
    p -= p.mean()
    spins = _spins_out(mus, _template_spins(template), tol)
    return OpenRadialState(KOrbitPoint(L), spins, KOrbitPoint(R), p, q, reg_eps=reg_eps, tol=tol)


def gauge_fix(es: ExtendedState, template=None, **kw):
    if es.kind == "periodic":
        return gauge_fix_periodic(es, template, **kw)
    return gauge_fix_open(es, template, **kw)


def _signs(row, N):
    s = np.ones(N)
    for j in range(1, N):
        s[j] = 1.0 if row[j] >= 0 else -1.0
    if N % 2 == 0 and np.prod(s) < 0:
        # only det-1 sign patterns are gauge; the last sign is then forced
        s[-1] = -s[-1]
    return s


def canonical_form(state) -> dict:
    """Representative of the residual gauge class, for comparing radial states.

    Periodic: diagonal ``h`` (det 1) balancing ``|mu^(1)_1j| = |mu^(1)_j1|`` and
    making ``mu^(1)_1j`` nonnegative where the det constraint allows.
    Open: det-1 sign matrices only, fixed on the first row of the first spin
    (or of ``mu_left`` when there are no spins).
    """
    N = state.N
    mus = np.array([spin_matrix(s) for s in state.spins]).reshape(-1, N, N)
    if isinstance(state, PeriodicRadialState):
        ref = mus[0]
        h = np.ones(N)
        for j in range(1, N):
            num, den = abs(ref[0, j]), abs(ref[j, 0])
            h[j] = np.sqrt(den / num) if num > 0 and den > 0 else 1.0
        s = _signs(ref[0] * h, N)
        d = h * s
        mus = mus * d[None, None, :] / d[None, :, None]
        return {"q": np.array(state.q), "p": np.array(state.p), "mus": mus}
    ref = mus[0] if len(mus) else state.L
    s = _signs(ref[0], N)
    conj = s[:, None] * s[None, :]
    return {
        "q": np.array(state.q),
        "p": np.array(state.p),
        "mus": mus * conj[None],
        "L": state.L * conj,
        "R": state.R * conj,
    }


def radial_distance(s1, s2, relative: bool = False) -> float:
    """Max entrywise difference of the canonical forms.

    With ``relative=True`` each block (``q``, ``p``, spins, boundary points) is
    divided by ``max(1, largest entry of that block in s1)``.
    """
    c1, c2 = canonical_form(s1), canonical_form(s2)
    if c1.keys() != c2.keys():
        raise ValueError("cannot compare states of different chain types")
    out = 0.0
    for k in c1:
        if not c1[k].size:
            continue
        d = float(np.abs(c1[k] - c2[k]).max())
        if relative:
            d /= max(1.0, float(np.abs(c1[k]).max()))
        out = max(out, d)
    return out
