"""Numerical certification of the integrable and superintegrable structure.

Every suite returns a report dictionary
``{suite, trials, tolerance, max_residual, pass, per_case}`` where
``pass`` means ``max_residual < tolerance``.  Cases draw their randomness from
independent children of one ``SeedSequence``, so results do not depend on how
the cases are scheduled across worker processes.
"""

from __future__ import annotations

import itertools
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics.angles import AngleError, angle, angle_slope, diagonalizer, rotation_diagonalizer
from .dynamics.chart import DarbouxChart, chart_for
from .dynamics.extended import (
    ExtendedState,
    GaugeFixError,
    embed_extended,
    flow_extended,
    gauge_fix,
    gauge_transform,
    moment_map,
    radial_distance,
    random_gauge,
)
from .dynamics.integrate import IntegrationError, IntegratorConfig, integrate
from .liealg import adjoint_star, casimir, gradient_invariant, project_k, random_algebra, random_group
from .openchain import OpenRadialState, bkzb_D, felder_r_rescaled, h2_open_from_reconstruction, random_open_state, theta_twist_r
from .orbits import local_spins
from .periodic import PeriodicRadialState, RegularityError, h2_from_reconstruction, kzb_D, random_periodic_state

__all__ = [
    "TraceWordSpec",
    "trace_word",
    "trace_word_flat",
    "standard_words",
    "ConservationReport",
    "conservation_report",
    "RankAmbiguityError",
    "numerical_rank",
    "liouville_count_probe",
    "dimension_probe",
    "psi_map",
    "starred_action",
    "starred_moment_map",
    "psi_equivariance_check",
    "psi_leaf_check",
    "dk_consistency_suite",
    "commutativity_suite",
    "conservation_suite",
    "angle_linearity_suite",
    "projection_vs_ode_suite",
    "psi_suite",
    "dims_suite",
    "liouville_suite",
    "rank1_suite",
    "SUITES",
    "run_suite",
    "make_report",
]


# --- reports and scheduling ---------------------------------------------------


def make_report(suite: str, tolerance: float, per_case: list[dict], extra: dict | None = None) -> dict:
    resid = [float(c["residual"]) for c in per_case]
    max_r = max(resid) if resid else 0.0
    out = {
        "suite": suite,
        "trials": len(per_case),
        "tolerance": float(tolerance),
        "max_residual": max_r,
        "pass": bool(per_case) and max_r < tolerance and all(c.get("ok", True) for c in per_case),
        "per_case": per_case,
    }
    if extra:
        out.update(extra)
    return out


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("SPINCM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"SPINCM_THREADS must be an integer, got {env!r}") from None
    return 1


def _run_cases(fn: Callable, cases: list, workers: int | None) -> list:
    w = min(_workers(workers), max(1, len(cases)))
    if w == 1:
        return [fn(*c) for c in cases]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, *zip(*cases)))


def _seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def _random_state(kind: str, N: int, n: int, rng, **kw):
    if kind == "periodic":
        return random_periodic_state(N, n, rng, **{k: v for k, v in kw.items() if k != "boundary"})
    return random_open_state(N, n, rng, **kw)


# --- trace words --------------------------------------------------------------

_TOKEN = re.compile(r"([YZ])(?:\^?(\d+))?")


@dataclass(frozen=True)
class TraceWordSpec:
    """``Tr`` of a word in ``Y`` (the site momentum) and ``Z`` (its left neighbour, transported).

    Periodic sites are ``1..n`` with ``Z`` taken cyclically.  Open sites are
    ``0..n+1``: for ``1 <= i <= n``, ``Z = Ad_{g_{i-1}^-1} x_{i-1}``; at site 0
    the pair is ``(x_0, pi(x_0))`` and at site ``n+1`` it is
    ``(Ad_{g_n^-1} x_n, pi(Ad_{g_n^-1} x_n))``.
    """

    site: int
    word: tuple[tuple[str, int], ...]

    def __post_init__(self):
        w = self.word
        if isinstance(w, str):
            w = self.parse(w)
        w = tuple((str(a), int(e)) for a, e in w)
        if not w:
            raise ValueError("trace word must be nonempty")
        for a, e in w:
            if a not in ("Y", "Z") or e < 1:
                raise ValueError(f"malformed trace word letter {a!r}^{e}")
        object.__setattr__(self, "word", w)

    @staticmethod
    def parse(text: str) -> tuple[tuple[str, int], ...]:
        s = re.sub(r"\s+", "", text)
        out, pos = [], 0
        while pos < len(s):
            m = _TOKEN.match(s, pos)
            if not m:
                raise ValueError(f"malformed trace word {text!r} at position {pos}")
            out.append((m.group(1), int(m.group(2) or 1)))
            pos = m.end()
        return tuple(out)

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(a for a, e in self.word for _ in range(e))

    @property
    def label(self) -> str:
        body = "".join(a if e == 1 else f"{a}^{e}" for a, e in self.word)
        return f"Tr({body})@{self.site}"


def _word_sites(kind: str, n: int) -> range:
    return range(1, n + 1) if kind == "periodic" else range(0, n + 2)


def _check_site(kind, n, site):
    if site not in _word_sites(kind, n):
        raise IndexError(f"trace-word site {site} invalid for a {kind} chain with n={n}")


def _pair_extended(es: ExtendedState, site: int):
    x, g = es.x, es.g
    n = es.n
    _check_site(es.kind, n, site)
    if es.kind == "periodic":
        i = site - 1
        j = (i - 1) % n
        return x[i], adjoint_star(np.linalg.inv(g[j]), x[j])
    if site == 0:
        return x[0], project_k(x[0])
    if site == n + 1:
        y = adjoint_star(np.linalg.inv(g[n]), x[n])
        return y, project_k(y)
    return x[site], adjoint_star(np.linalg.inv(g[site - 1]), x[site - 1])


def _word_value(letters, Y, Z) -> float:
    m = np.eye(Y.shape[0])
    for a in letters:
        m = m @ (Y if a == "Y" else Z)
    return float(np.trace(m))


def _word_grads(letters, Y, Z):
    """Entrywise gradients of ``Tr(word)`` with respect to ``Y`` and ``Z``."""
    mats = [Y if a == "Y" else Z for a in letters]
    N = Y.shape[0]
    GY, GZ = np.zeros((N, N)), np.zeros((N, N))
    for pos, a in enumerate(letters):
        rest = np.eye(N)
        for m in mats[pos + 1 :] + mats[:pos]:
            rest = rest @ m
        if a == "Y":
            GY += rest.T
        else:
            GZ += rest.T
    return GY, GZ


def trace_word(es: ExtendedState, spec: TraceWordSpec) -> float:
    Y, Z = _pair_extended(es, spec.site)
    return _word_value(spec.letters, Y, Z)


def trace_word_flat(chart: DarbouxChart, z, spec: TraceWordSpec, grad: bool = False):
    """Trace word evaluated on a radial chart point; optionally with its chart gradient.

    Uses the representative ``g = (1, ..., 1, a)``, conjugated so that only
    the transported factor ``Ad_{a^-1}`` remains explicit.
    """
    n = chart.n
    _check_site(chart.kind, n, spec.site)
    xs = chart.x_all(z)
    q = np.asarray(z, dtype=float)[chart.slices["q"]]
    E = np.exp(q[None, :] - q[:, None])  # (Ad_{a^-1} X)_rc = X_rc E_rc
    site = spec.site
    # (array index, transported?) for Y and Z; 'pi' marks Z = pi(Y)
    if chart.kind == "periodic":
        ysrc = (site - 1, False)
        zsrc = (n - 1, True) if site == 1 else (site - 2, False)
    elif site == 0:
        ysrc, zsrc = (0, False), "pi"
    elif site == n + 1:
        ysrc, zsrc = (n, True), "pi"
    else:
        ysrc, zsrc = (site, False), (site - 1, False)

    def build(src):
        idx, tr = src
        return xs[idx] * E if tr else xs[idx]

    Y = build(ysrc)
    Z = project_k(Y) if zsrc == "pi" else build(zsrc)
    val = _word_value(spec.letters, Y, Z)
    if not grad:
        return val
    GY, GZ = _word_grads(spec.letters, Y, Z)
    if zsrc == "pi":
        GY = GY + 0.5 * (GZ - GZ.T)
        parts = [(ysrc, GY)]
    else:
        parts = [(ysrc, GY), (zsrc, GZ)]
    out = np.zeros(chart.dim)
    qs = chart.slices["q"]
    for (idx, tr), G in parts:
        if tr:
            W = G * E * xs[idx]
            out[qs] += W.sum(axis=0) - W.sum(axis=1)
            G = G * E
        site_k = idx + 1 if chart.kind == "periodic" else idx
        out += chart.pullback(z, site_k, G)
    return val, out


def standard_words(kind: str, N: int, n: int, max_len: int = 4) -> list[TraceWordSpec]:
    """Casimir words ``Y^d`` plus every mixed word up to ``max_len`` letters (up to rotation), per site."""
    mixed = []
    seen = set()
    for length in range(2, max_len + 1):
        for w in itertools.product("YZ", repeat=length):
            if "Y" not in w or "Z" not in w:
                continue
            key = min(w[k:] + w[:k] for k in range(length))
            if key in seen:
                continue
            seen.add(key)
            mixed.append("".join(key))
    out = []
    for site in _word_sites(kind, n):
        out += [TraceWordSpec(site, f"Y^{d}") for d in range(2, N + 1)]
        out += [TraceWordSpec(site, w) for w in mixed]
    return out


# --- conservation -------------------------------------------------------------


@dataclass
class ConservationReport:
    """Drift of named quantities over a sequence of evaluations.

    ``drift`` is the absolute drift divided by ``max(1, |initial|)``.
    """

    labels: list[str]
    initial: np.ndarray
    max_abs_drift: np.ndarray
    tolerance: float
    max_rel_drift: np.ndarray = field(init=False)

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=float)
        self.max_abs_drift = np.asarray(self.max_abs_drift, dtype=float)
        self.max_rel_drift = self.max_abs_drift / np.maximum(1.0, np.abs(self.initial))

    @property
    def drift(self) -> float:
        return float(self.max_rel_drift.max()) if self.max_rel_drift.size else 0.0

    @property
    def passed(self) -> bool:
        return self.drift < self.tolerance

    def to_dict(self) -> dict:
        worst = int(np.argmax(self.max_rel_drift)) if self.labels else -1
        return {
            "quantities": len(self.labels),
            "drift": self.drift,
            "worst": self.labels[worst] if worst >= 0 else None,
            "pass": self.passed,
        }


def conservation_report(values: np.ndarray, labels: Sequence[str], tolerance: float) -> ConservationReport:
    """``values`` has one row per evaluation time and one column per quantity."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    drift = np.abs(values - values[0]).max(axis=0)
    return ConservationReport(list(labels), values[0], drift, tolerance)


# --- ranks and dimensions -----------------------------------------------------


class RankAmbiguityError(ArithmeticError):
    """Singular values straddle the rank threshold without a clear gap."""


def numerical_rank(M, rel: float = 1e-8, gap: float = 10.0) -> int:
    """Rank with relative threshold ``rel``; values within a factor ``gap`` of it are ambiguous."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    thr = rel * s[0]
    near = (s > thr / gap) & (s < thr * gap)
    if np.any(near):
        raise RankAmbiguityError(f"singular values {s[near] / s[0]} (relative) lie near the threshold {rel}")
    return int(np.sum(s > thr))


def _constraint_grads(chart: DarbouxChart, z) -> np.ndarray:
    """Gradients of the first-class constraints: ``a.b`` per spin, plus the Cartan moment (periodic)."""
    s = chart.slices
    N, n = chart.N, chart.n
    z = np.asarray(z, dtype=float)
    A = z[s["a"]].reshape(n, N)
    B = z[s["b"]].reshape(n, N)
    rows = []
    for k in range(n):
        g = np.zeros(chart.dim)
        g[s["a"].start + k * N : s["a"].start + (k + 1) * N] = B[k]
        g[s["b"].start + k * N : s["b"].start + (k + 1) * N] = A[k]
        rows.append(g)
    if chart.kind == "periodic":
        for i in range(N):
            g = np.zeros(chart.dim)
            for k in range(n):
                g[s["a"].start + k * N + i] = B[k, i]
                g[s["b"].start + k * N + i] = A[k, i]
            rows.append(g)
    return np.array(rows).reshape(-1, chart.dim)


def _orthonormal_range(M, rel=1e-8):
    U, sv, _ = np.linalg.svd(M)
    r = numerical_rank(M, rel)
    return U[:, :r]


def _reduced_tangent(chart: DarbouxChart, z, rel=1e-8):
    """Orthonormal basis of (symplectic leaf) ∩ (constraint tangent), plus the pieces."""
    Pi = chart.poisson_matrix(z)
    U = _orthonormal_range(Pi, rel)
    C = _constraint_grads(chart, z)
    CU = C @ U
    if CU.size:
        _, sv, Vt = np.linalg.svd(CU)
        rc = numerical_rank(CU, rel)
        T = U @ Vt[rc:].T
    else:
        rc = 0
        T = U
    rg = numerical_rank((Pi @ C.T).T, rel) if C.size else 0
    return T, U.shape[1], rc, rg


def _hamiltonian_grads(chart, z):
    return np.array([chart.casimir_grad(z, k, d) for k in chart.sites for d in range(2, chart.N + 1)])


def liouville_count_probe(state, extra: Sequence[tuple[int, int]] = (), rel: float = 1e-8) -> int:
    """Rank of the Hamiltonian family on the reduced tangent space.

    ``extra`` appends further ``(site, degree)`` Hamiltonians (duplicates do not change the rank).
    """
    chart = chart_for(state)
    z = chart.to_flat(state)
    T = _reduced_tangent(chart, z, rel)[0]
    J = _hamiltonian_grads(chart, z)
    if extra:
        J = np.vstack([J] + [chart.casimir_grad(z, k, d)[None] for k, d in extra])
    return numerical_rank(J @ T, rel)


def _k_orbit_dim(m, rel=1e-8) -> int:
    """Dimension of the so(N)-orbit through ``m``: rank of ``X -> [X, m]`` on so(N)."""
    N = m.shape[0]
    iu = np.triu_indices(N, 1)
    cols = []
    for i, j in zip(*iu):
        X = np.zeros((N, N))
        X[i, j], X[j, i] = 1.0, -1.0
        cols.append((X @ m - m @ X)[iu])
    if not cols or np.abs(m).max() == 0.0:
        return 0
    return numerical_rank(np.array(cols).T, rel)


def dimension_probe(state, max_len: int = 6, rel: float = 1e-8) -> dict:
    """Jacobian-rank dimensions of the phase space, the base and the intermediate space.

    ``dim_S`` is the leaf rank minus the ranks of the constraints and of the
    gauge directions they generate; ``dim_B`` is the rank of the Casimirs of
    the site momenta; ``dim_P`` is the rank of the trace-word invariants.  The
    ``expected`` block holds the closed-form counts for the orbit data.
    """
    chart = chart_for(state)
    z = chart.to_flat(state)
    T, rank_pi, rank_c, rank_g = _reduced_tangent(chart, z, rel)
    dim_S = rank_pi - rank_c - rank_g
    dim_B = numerical_rank(_hamiltonian_grads(chart, z) @ T, rel)
    words = standard_words(chart.kind, chart.N, chart.n, max_len)
    W = np.array([trace_word_flat(chart, z, w, grad=True)[1] for w in words])
    dim_P = numerical_rank(W @ T, rel)
    N, n = chart.N, chart.n
    r = N - 1
    if chart.kind == "periodic":
        dim_O = 2 * n * r
        exp = {"dim_S": dim_O, "dim_B": n * r, "dim_P": dim_O - 2 * n * r + n * r}
    else:
        dim_O = 2 * n * r + _k_orbit_dim(state.L) + _k_orbit_dim(state.R)
        exp = {"dim_S": 2 * r + dim_O, "dim_B": (n + 1) * r, "dim_P": dim_O + (1 - n) * r}
    return {
        "dim_S": dim_S,
        "dim_B": dim_B,
        "dim_P": dim_P,
        "fiber_S_to_P": dim_S - dim_P,
        "fiber_P_to_B": dim_P - dim_B,
        "balance": dim_S == dim_P + dim_B,
        "rank_poisson": rank_pi,
        "rank_constraints": rank_c,
        "rank_gauge": rank_g,
        "words": len(words),
        "expected": exp,
    }


# --- the n = 2 comparison map -------------------------------------------------


def _unpack2(es: ExtendedState):
    if es.kind != "periodic" or es.n != 2:
        raise ValueError("the comparison map needs a periodic extended state with n = 2")
    return es.x[0], es.x[1], es.g[0], es.g[1]


def psi_map(es: ExtendedState) -> ExtendedState:
    """``(x1, x2, g1, g2) -> (-x1, Ad_{g1} x2, g1, g1 g2 g1)``."""
    x1, x2, g1, g2 = _unpack2(es)
    return ExtendedState("periodic", np.array([-x1, adjoint_star(g1, x2)]), np.array([g1, g1 @ g2 @ g1]))


def starred_action(h, es: ExtendedState) -> ExtendedState:
    """``(h1, h2)_* (x1, x2, g1, g2) = (Ad_{h1} x1, Ad_{h1} x2, h1 g1 h2^-1, h1 g2 h2^-1)``."""
    x1, x2, g1, g2 = _unpack2(es)
    h1, h2 = np.asarray(h[0], dtype=float), np.asarray(h[1], dtype=float)
    h2i = np.linalg.inv(h2)
    return ExtendedState(
        "periodic", np.array([adjoint_star(h1, x1), adjoint_star(h1, x2)]), np.array([h1 @ g1 @ h2i, h1 @ g2 @ h2i])
    )


def starred_moment_map(es: ExtendedState):
    x1, x2, g1, g2 = _unpack2(es)
    return x1 + x2, -adjoint_star(np.linalg.inv(g1), x1) - adjoint_star(np.linalg.inv(g2), x2)


def _state_diff(a: ExtendedState, b: ExtendedState) -> float:
    scale = max(1.0, float(np.abs(a.x).max()), float(np.abs(a.g).max()))
    return max(float(np.abs(a.x - b.x).max()), float(np.abs(a.g - b.g).max())) / scale


def psi_equivariance_check(es: ExtendedState, h) -> float:
    """``|psi(h . s) - h ._* psi(s)|``, relative to the size of the data."""
    lhs = psi_map(gauge_transform(es, h))
    rhs = starred_action(h, psi_map(es))
    return _state_diff(lhs, rhs)


def _casimirs(m) -> np.ndarray:
    return np.array([casimir(d, m) for d in range(2, m.shape[0] + 1)])


def psi_leaf_check(es: ExtendedState) -> float:
    """Casimir mismatch between ``mu_*(psi(s))`` and the swapped pair ``(mu_2(s), mu_1(s))``."""
    mu = moment_map(es)
    star = starred_moment_map(psi_map(es))
    worst = 0.0
    for a, b in ((star[0], mu[1]), (star[1], mu[0])):
        ca, cb = _casimirs(a), _casimirs(b)
        worst = max(worst, float(np.max(np.abs(ca - cb) / np.maximum(1.0, np.abs(cb)))))
    return worst


def random_extended_pair(N: int, rng: np.random.Generator) -> ExtendedState:
    x = np.array([random_algebra(N, rng) for _ in range(2)])
    g = np.array([random_group(N, rng) for _ in range(2)])
    return ExtendedState("periodic", x, g)


def _psi_case(seed, N):
    rng = np.random.default_rng(seed)
    es = random_extended_pair(N, rng)
    h = np.array([random_group(N, rng), random_group(N, rng)])
    eq = psi_equivariance_check(es, h)
    leaf = psi_leaf_check(es)
    return {"N": N, "equivariance": eq, "leaf": leaf}


def psi_suite(trials: int = 100, tol: float = 1e-12, leaf_tol: float = 1e-10, seed: int = 0, Ns=(2, 3, 4), workers=None) -> dict:
    seeds = _seeds(seed, trials)
    cases = [(s, Ns[i % len(Ns)]) for i, s in enumerate(seeds)]
    per = _run_cases(_psi_case, cases, workers)
    for c in per:
        c["residual"] = c["equivariance"]
        c["ok"] = c["leaf"] < leaf_tol
    max_leaf = max(c["leaf"] for c in per) if per else 0.0
    return make_report("psi", tol, per, {"leaf_tolerance": leaf_tol, "max_leaf_residual": max_leaf})


# --- KZB / bKZB identities ----------------------------------------------------


def _dk_case(seed, kind, N, n):
    rng = np.random.default_rng(seed)
    s = _random_state(kind, N, n, rng)
    worst, worst_theta = 0.0, 0.0
    if kind == "periodic":
        H = [h2_from_reconstruction(s, k) for k in range(1, n + 1)]
        for k in range(2, n + 1):
            D = kzb_D(s, k)
            diff = H[k - 1] - H[k - 2]
            worst = max(worst, abs(D - diff) / max(abs(H[k - 1]), abs(H[k - 2]), 1e-300))
        return {"kind": kind, "N": N, "n": n, "residual": worst}
    H = [h2_open_from_reconstruction(s, k) for k in range(0, n + 1)]
    for k in range(1, n + 1):
        D = bkzb_D(s, k)
        diff = H[k] - H[k - 1]
        worst = max(worst, abs(D - diff) / max(abs(H[k]), abs(H[k - 1]), 1e-300))
    mus = s.mus
    for k in range(1, n + 1):
        for l in range(1, n + 1):
            if k == l:
                continue
            # twisted pairing from the definition: theta applied to the k-th spin
            twisted = list(mus)
            twisted[k - 1] = -mus[k - 1].T
            direct = felder_r_rescaled(s.replace(spins=tuple(twisted)), k, l)
            a, b = theta_twist_r(s, k, l), theta_twist_r(s, l, k)
            worst_theta = max(worst_theta, abs(a - b), abs(a - direct))
    return {"kind": kind, "N": N, "n": n, "residual": worst, "theta_residual": worst_theta, "ok": worst_theta < 1e-12}


def dk_consistency_suite(
    kind: str = "periodic", trials: int = 1000, tol: float = 1e-10, seed: int = 0, Ns=(2, 3, 4, 5), ns=(2, 3, 4), workers=None
) -> dict:
    """Closed-form ``D_k`` against differences of reconstructed quadratic Casimirs.

    The residual is ``|D_k - (H^(k) - H^(k-1))| / max(|H^(k)|, |H^(k-1)|)``.
    Open chains also check the twisted pairing symmetry to 1e-12.
    """
    grid = list(itertools.product(Ns, ns))
    cases = [(s, kind, *grid[i % len(grid)]) for i, s in enumerate(_seeds(seed, trials))]
    return make_report(f"dk-{kind}", tol, _run_cases(_dk_case, cases, workers))


# --- Poisson commutativity ----------------------------------------------------


def _commute_case(seed, kind, N, n, scale):
    rng = np.random.default_rng(seed)
    s = _random_state(kind, N, n, rng)
    if scale != 1.0:
        s = _scale_state(s, scale)
    chart = chart_for(s)
    z = chart.to_flat(s)
    grads = _hamiltonian_grads(chart, z)
    flows = np.array([chart.poisson_apply(z, g) for g in grads])
    B = grads @ flows.T
    gnorm = float(np.abs(grads).max())
    return {"kind": kind, "N": N, "n": n, "pairs": int(B.size), "residual": float(np.abs(B).max()), "grad_scale": gnorm}


def _scale_state(s, c):
    """Multiply ``p``, the spins and the boundary points by ``c`` (``xi`` scales by ``c``)."""
    from .orbits import RankOneOrbitPoint

    spins = tuple(RankOneOrbitPoint(sp.xi * c, sp.a * np.sqrt(abs(c)), sp.b * np.sign(c) * np.sqrt(abs(c))) for sp in s.spins)
    if isinstance(s, PeriodicRadialState):
        return PeriodicRadialState(spins, s.p * c, s.q)
    from .orbits import KOrbitPoint

    return OpenRadialState(KOrbitPoint(s.L * c), spins, KOrbitPoint(s.R * c), s.p * c, s.q)


def commutativity_suite(
    kind: str = "periodic",
    trials: int = 200,
    tol: float = 1e-7,
    seed: int = 0,
    Ns=(2, 3, 4),
    ns=(1, 2, 3),
    scale: float = 1.0,
    workers=None,
) -> dict:
    """Max ``|{H_a, H_b}|`` over all pairs of the Hamiltonian family, analytic gradients."""
    grid = list(itertools.product(Ns, ns))
    cases = [(s, kind, *grid[i % len(grid)], scale) for i, s in enumerate(_seeds(seed, trials))]
    return make_report(f"commute-{kind}", tol, _run_cases(_commute_case, cases, workers))


# --- conservation of trace words ----------------------------------------------


def _flow_window(es, site, d, cap=1.0, spread=4.0):
    """Time window keeping ``t * (spread of grad c_d)`` below ``spread``."""
    G = gradient_invariant(d, es.x[es.site(site)])
    w = 2.0 * float(np.abs(np.linalg.eigvals(G)).max())
    return min(cap, spread / max(w, 1e-12))


def _conserve_extended_case(seed, kind, N, n, ntimes, tol):
    rng = np.random.default_rng(seed)
    s = _random_state(kind, N, n, rng)
    es = gauge_transform(embed_extended(s), random_gauge(embed_extended(s), rng))
    words = standard_words(kind, N, n)
    base = np.array([trace_word(es, w) for w in words])
    worst = 0.0
    for site in range(1, n + 1) if kind == "periodic" else range(0, n + 1):
        for d in range(2, N + 1):
            T = _flow_window(es, site, d)
            rows = [base] + [[trace_word(flow_extended(es, site, d, t), w) for w in words] for t in np.linspace(0, T, ntimes)[1:]]
            rep = conservation_report(np.array(rows), [w.label for w in words], tol)
            worst = max(worst, rep.drift)
    return {"kind": kind, "N": N, "n": n, "mode": "extended", "words": len(words), "residual": worst}


def _conserve_ode_case(seed, kind, N, n, T, tol, cfg_dict):
    rng = np.random.default_rng(seed)
    cfg = IntegratorConfig(**cfg_dict)
    for attempt in range(20):
        s = _random_state(kind, N, n, rng)
        try:
            traj = integrate(s, n, 2, T, cfg)
            break
        except IntegrationError:
            continue
    else:
        return {"kind": kind, "N": N, "n": n, "mode": "ode", "residual": float("inf"), "ok": False}
    words = standard_words(kind, N, n)
    rows = [[trace_word(embed_extended(st), w) for w in words] for st in traj.states]
    rep = conservation_report(np.array(rows), [w.label for w in words], tol)
    return {"kind": kind, "N": N, "n": n, "mode": "ode", "T": T, "resamples": attempt, "residual": rep.drift, **{"worst": rep.to_dict()["worst"]}}


def conservation_suite(
    trials: int = 10,
    tol_exact: float = 1e-8,
    tol_ode: float = 1e-6,
    seed: int = 0,
    T: float = 10.0,
    ode_configs=((3, 2), (2, 1)),
    kinds=("periodic", "open"),
    ntimes: int = 11,
    cfg: IntegratorConfig | None = None,
    workers=None,
) -> dict:
    """Trace-word drift along exact extended flows (every site and degree) and along integrated ``H2^(n)``.

    Residuals are normalized so both tolerances compare against ``1``:
    ``drift / tol`` per case.
    """
    cfg = cfg or IntegratorConfig(save_every=100)
    seeds = _seeds(seed, trials + len(ode_configs) * len(kinds))
    grid = list(itertools.product((2, 3, 4), (1, 2, 3)))
    ex_cases = [(seeds[i], kinds[i % len(kinds)], *grid[i % len(grid)], ntimes, tol_exact) for i in range(trials)]
    ode_cases = []
    j = trials
    for kind in kinds:
        for N, n in ode_configs:
            ode_cases.append((seeds[j], kind, N, n, T, tol_ode, cfg.to_dict()))
            j += 1
    per = _run_cases(_conserve_extended_case, ex_cases, workers)
    for c in per:
        c["drift"] = c["residual"]
        c["residual"] = c["drift"] / tol_exact
    per_ode = _run_cases(_conserve_ode_case, ode_cases, workers)
    for c in per_ode:
        c["drift"] = c["residual"]
        c["residual"] = c["drift"] / tol_ode
    return make_report("conserve", 1.0, per + per_ode, {"tol_exact": tol_exact, "tol_ode": tol_ode})


# --- angle variables ----------------------------------------------------------


def _angle_case(seed, kind, N, n, samples):
    rng = np.random.default_rng(seed)
    boundary = bool(rng.integers(0, 2)) if kind == "open" else True
    for attempt in range(50):
        s = _random_state(kind, N, n, rng, p_scale=2.0, boundary=boundary)
        es = embed_extended(s)
        m = n if kind == "periodic" else n + 2
        js = rng.integers(0, N, m)
        try:
            angle(es, js)
            # every flow must also see real simple spectra
            sites = list(range(1, n + 1)) if kind == "periodic" else list(range(0 if not boundary else 1, n + 1))
            slopes = {(i, d): angle_slope(es, i, d, js) for i in sites for d in range(2, N + 1)}
            break
        except AngleError:
            continue
    else:
        return {"kind": kind, "N": N, "n": n, "residual": float("inf"), "ok": False}
    worst, crossed = 0.0, False
    f0 = angle(es, js)
    for (i, d), slope in slopes.items():
        T = _flow_window(es, i, d)
        for t in np.linspace(0.0, T, samples):
            f = angle(flow_extended(es, i, d, t), js)
            crossed |= f.sign != f0.sign
            worst = max(worst, abs(f.log_abs - f0.log_abs - t * slope))
    return {
        "kind": kind,
        "N": N,
        "n": n,
        "weights": [int(j) for j in js],
        "flows": len(slopes),
        "site0_flows": kind == "open" and not boundary,
        "resamples": attempt,
        "sign_crossing": crossed,
        "residual": worst,
    }


def angle_linearity_suite(trials: int = 40, tol: float = 1e-9, seed: int = 0, samples: int = 50, kinds=("periodic", "open"), workers=None) -> dict:
    """Deviation of ``log|f(t)|`` from the exact line ``log|f(0)| + t * slope`` over ``samples`` times.

    The time window is ``min(1, 4 / spread)`` with ``spread`` the spectral
    width of the flow generator, which bounds the dynamic range of the
    matrix elements involved.  Open cases assert sign-group invariance of the
    boundary vectors inside :func:`angle_open`.
    """
    grid = list(itertools.product(kinds, (2, 3, 4), (1, 2, 3)))
    cases = [(s, *grid[i % len(grid)], samples) for i, s in enumerate(_seeds(seed, trials))]
    return make_report("angles", tol, _run_cases(_angle_case, cases, workers))


# --- projection method against the integrator ---------------------------------


def _exact_path(s, site, d, times, min_gap_abs=1e-3, max_spread=10.0):
    """Projection-method states at ``times``.

    Returns ``None`` if the path leaves the regular stratum or if the spread
    ``q_1 - q_N`` exceeds ``max_spread``: gauge fixing then conjugates by
    matrices of condition number about ``exp(spread)`` and loses the digits
    the comparison needs.
    """
    es = embed_extended(s)
    out = []
    for t in times:
        try:
            st = gauge_fix(flow_extended(es, site, d, t), s)
        except (GaugeFixError, RegularityError):
            return None
        if np.min(-np.diff(st.q)) < min_gap_abs or st.q[0] - st.q[-1] > max_spread:
            return None
        out.append(st)
    return out


def _projection_case(seed, kind, N, n, site, d, T, cfg_dict):
    rng = np.random.default_rng(seed)
    cfg = IntegratorConfig(**cfg_dict)
    nsteps = max(1, int(np.ceil(abs(T) / cfg.dt - 1e-9)))
    ks = sorted(set(range(0, nsteps + 1, cfg.save_every)) | {nsteps})
    grid = [k * (T / nsteps) for k in ks]
    for attempt in range(20):
        s = _random_state(kind, N, n, rng)
        exact = _exact_path(s, site, d, grid)
        if exact is None:
            continue
        try:
            traj = integrate(s, site, d, T, cfg)
        except IntegrationError:
            continue
        break
    else:
        return {"kind": kind, "N": N, "n": n, "site": site, "degree": d, "residual": float("inf"), "ok": False}
    worst = max(radial_distance(st, ex, relative=True) for st, ex in zip(traj.states, exact))
    return {"kind": kind, "N": N, "n": n, "site": site, "degree": d, "samples": len(traj), "resamples": attempt, "residual": worst}


def projection_vs_ode_suite(
    tol: float = 1e-6,
    seed: int = 0,
    T: float = 1.0,
    Ns=(2, 3),
    ns=(1, 2),
    kinds=("periodic", "open"),
    cfg: IntegratorConfig | None = None,
    workers=None,
) -> dict:
    """Sup radial distance between integrated and exact (projection-method) trajectories.

    Distances are block-relative (see :func:`radial_distance`), since rank-one
    spin coordinates grow exponentially with the spread of ``q``.  Samples
    whose exact path leaves the regular stratum before ``T`` are redrawn.

    For each chain and size the flows of ``H2^(n)`` and of the top-degree
    Casimir at the first site are compared.
    """
    cfg = cfg or IntegratorConfig(save_every=50)
    combos = []
    for kind in kinds:
        for N in Ns:
            for n in ns:
                first = 1 if kind == "periodic" else 0
                flows = {(n, 2), (first, N)}
                combos += [(kind, N, n, i, d) for i, d in sorted(flows)]
    cases = [(s, *c, T, cfg.to_dict()) for s, c in zip(_seeds(seed, len(combos)), combos)]
    return make_report("projection", tol, _run_cases(_projection_case, cases, workers))


# --- rank and dimension probes ------------------------------------------------


def _dims_case(seed, kind, N, n, boundary):
    rng = np.random.default_rng(seed)
    s = _random_state(kind, N, n, rng, boundary=boundary)
    try:
        dims = dimension_probe(s)
    except RankAmbiguityError as exc:
        return {"kind": kind, "N": N, "n": n, "residual": float("inf"), "ok": False, "error": str(exc)}
    exp = dims["expected"]
    miss = sum(abs(dims[k] - exp[k]) for k in ("dim_S", "dim_B", "dim_P")) + (0 if dims["balance"] else 1)
    return {"kind": kind, "N": N, "n": n, "boundary": boundary, **{k: dims[k] for k in ("dim_S", "dim_B", "dim_P")}, "expected": exp, "residual": float(miss)}


def dims_suite(
    trials_per_config: int = 20,
    tol: float = 0.5,
    seed: int = 0,
    configs=(("periodic", 2, 2), ("periodic", 3, 1), ("periodic", 3, 2), ("open", 2, 1), ("open", 3, 1), ("open", 3, 2)),
    workers=None,
) -> dict:
    """Rank-based ``dim S``, ``dim B``, ``dim P`` against the closed-form counts.

    Residual is the total count mismatch (plus one if the balance fails), so
    the default tolerance 0.5 demands exact agreement.
    """
    cases = []
    seeds = _seeds(seed, trials_per_config * len(configs))
    for ci, (kind, N, n) in enumerate(configs):
        for t in range(trials_per_config):
            boundary = kind == "open" and t % 2 == 1
            cases.append((seeds[ci * trials_per_config + t], kind, N, n, boundary))
    return make_report("dims", tol, _run_cases(_dims_case, cases, workers))


def _liouville_case(seed, N, n):
    rng = np.random.default_rng(seed)
    s = random_periodic_state(N, n, rng)
    try:
        r = liouville_count_probe(s)
        r_dup = liouville_count_probe(s, extra=[(1, 2)])
    except RankAmbiguityError as exc:
        return {"N": N, "n": n, "residual": float("inf"), "ok": False, "error": str(exc)}
    return {"N": N, "n": n, "rank": r, "rank_with_duplicate": r_dup, "expected": n * (N - 1), "residual": float(abs(r - n * (N - 1)) + abs(r_dup - r))}


def liouville_suite(trials_per_config: int = 20, tol: float = 0.5, seed: int = 0, configs=((2, 1), (2, 2), (3, 2), (4, 3)), workers=None) -> dict:
    """Rank of the periodic Hamiltonian family on the reduced space, expected ``n(N-1)``."""
    seeds = _seeds(seed, trials_per_config * len(configs))
    cases = [(seeds[i], *configs[i // trials_per_config]) for i in range(len(seeds))]
    return make_report("liouville", tol, _run_cases(_liouville_case, cases, workers))


# --- rank-one orbit identities ------------------------------------------------


def _rank1_case(seed, N, n):
    rng = np.random.default_rng(seed)
    s = random_periodic_state(N, n, rng)
    cas = max(abs(float(np.trace(sp.matrix @ sp.matrix)) - sp.xi**2 * (1 - 1 / N)) / max(1.0, sp.xi**2) for sp in s.spins)
    g = local_spins(s.spins)
    mu = s.mus.sum(axis=0)
    xi_tot = sum(sp.xi for sp in s.spins)
    spin = 0.0
    for i in range(N):
        for j in range(N):
            if i != j:
                lhs = float(np.einsum("kl,lk->", g[i], g[j]))
                rhs = mu[i, j] * mu[j, i] - xi_tot**2 / (N**2 * n)
                spin = max(spin, abs(lhs - rhs) / max(1.0, abs(rhs)))
    t_xi = np.array([sp.xi for sp in s.spins]) - xi_tot / n
    diag = float(np.abs(np.diag(g.sum(axis=0)) - t_xi).max())
    return {"N": N, "n": n, "casimir": cas, "local_spin": spin, "diagonal_moment": diag, "residual": max(cas, spin, diag)}


def rank1_suite(trials: int = 100, tol: float = 1e-12, seed: int = 0, Ns=(2, 3, 4, 5), ns=(1, 2, 3, 4), workers=None) -> dict:
    """Orbit Casimir, local-spin pairing identity and diagonal of the summed local spins."""
    grid = list(itertools.product(Ns, ns))
    cases = [(s, *grid[i % len(grid)]) for i, s in enumerate(_seeds(seed, trials))]
    return make_report("rank1", tol, _run_cases(_rank1_case, cases, workers))


# --- registry -----------------------------------------------------------------


def _dk_both(seed=0, trials=1000, tol=1e-10, workers=None):
    a = dk_consistency_suite("periodic", trials, tol, seed, workers=workers)
    b = dk_consistency_suite("open", trials, tol, seed + 1, workers=workers)
    return make_report("dk", tol, a["per_case"] + b["per_case"])


def _commute_both(seed=0, trials=200, tol=1e-7, workers=None):
    a = commutativity_suite("periodic", trials, tol, seed, workers=workers)
    b = commutativity_suite("open", trials, tol, seed + 1, workers=workers)
    return make_report("commute", tol, a["per_case"] + b["per_case"])


SUITES: dict[str, Callable[..., dict]] = {
    "dk": lambda seed=0, tol=None, workers=None: _dk_both(seed, tol=1e-10 if tol is None else tol, workers=workers),
    "commute": lambda seed=0, tol=None, workers=None: _commute_both(seed, tol=1e-7 if tol is None else tol, workers=workers),
    "conserve": lambda seed=0, tol=None, workers=None: _override(conservation_suite(seed=seed, workers=workers), tol),
    "angles": lambda seed=0, tol=None, workers=None: angle_linearity_suite(seed=seed, tol=1e-9 if tol is None else tol, workers=workers),
    "projection": lambda seed=0, tol=None, workers=None: projection_vs_ode_suite(seed=seed, tol=1e-6 if tol is None else tol, workers=workers),
    "psi": lambda seed=0, tol=None, workers=None: psi_suite(seed=seed, tol=1e-12 if tol is None else tol, workers=workers),
    "dims": lambda seed=0, tol=None, workers=None: dims_suite(seed=seed, tol=0.5 if tol is None else tol, workers=workers),
    "liouville": lambda seed=0, tol=None, workers=None: liouville_suite(seed=seed, tol=0.5 if tol is None else tol, workers=workers),
    "rank1": lambda seed=0, tol=None, workers=None: rank1_suite(seed=seed, tol=1e-12 if tol is None else tol, workers=workers),
}


def _override(report: dict, tol):
    if tol is None:
        return report
    return make_report(report["suite"], tol, report["per_case"], {k: v for k, v in report.items() if k not in ("suite", "trials", "tolerance", "max_residual", "pass", "per_case")})


def run_suite(name: str, seed: int = 0, tol: float | None = None, workers=None) -> dict:
    """Run one suite by name, or all of them (``"all"``)."""
    if name == "all":
        reports = [SUITES[k](seed=seed, tol=tol, workers=workers) for k in SUITES]
        per = [{"suite": r["suite"], "residual": r["max_residual"], "tolerance": r["tolerance"], "ok": r["pass"]} for r in reports]
        # each sub-suite has its own tolerance; the aggregate compares pass flags
        for c in per:
            c["residual"] = 0.0 if c["ok"] else 1.0
        return make_report("all", 0.5, per, {"reports": reports})
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return SUITES[name](seed=seed, tol=tol, workers=workers)
