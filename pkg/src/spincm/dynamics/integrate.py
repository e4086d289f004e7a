"""Numerical integration of Casimir Hamiltonians on the radial charts."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..liealg import is_regular, min_gap
from ..periodic import RegularityError
from .chart import DarbouxChart, RadialState, chart_for

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "hamiltonian_vector_field",
    "reproject",
    "fd_gradient",
]

SCHEMES = ("rk4", "dop853", "midpoint")


class IntegrationError(RuntimeError):
    """Integration stopped early; ``partial`` holds the trajectory up to ``time``."""

    def __init__(self, msg, time=None, partial=None):
        super().__init__(msg)
        self.time = time
        self.partial = partial


@dataclass(frozen=True)
class IntegratorConfig:
    """``rk4`` and ``midpoint`` use the fixed step ``dt``; ``dop853`` (the default) is adaptive.

For ``dop853``, ``dt * save_every`` sets the spacing of the saved times.

    ``midpoint`` (implicit midpoint) is symplectic for the constant Cartan block
    and second order; it stands in for leapfrog since the Hamiltonians here do
    not split into kinetic and potential parts.
    """

    scheme: str = "dop853"
    dt: float = 1e-3
    rtol: float = 1e-12
    atol: float = 1e-12
    save_every: int = 10
    gradient: str = "analytic"
    fd_step: float = 1e-6
    project: bool = True
    midpoint_tol: float = 1e-14
    midpoint_maxiter: int = 50

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.gradient not in ("analytic", "fd"):
            raise ValueError(f"gradient must be 'analytic' or 'fd', got {self.gradient!r}")
        for name in ("dt", "rtol", "atol", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0) and not np.all(np.diff(self.times) < 0):
            raise ValueError("times must be strictly monotone")

    def __len__(self):
        return len(self.states)


def fd_gradient(f, z, h: float) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    scale = max(1.0, float(np.abs(z).max()))
    step = h * scale
    out = np.empty_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = step
        out[i] = (f(z + e) - f(z - e)) / (2 * step)
    return out


def hamiltonian_vector_field(chart: DarbouxChart, site: int, d: int, gradient: str = "analytic", fd_step=1e-6):
    if gradient == "analytic":
        return lambda z: chart.poisson_apply(z, chart.casimir_grad(z, site, d))
    return lambda z: chart.poisson_apply(z, fd_gradient(lambda w: chart.casimir_value(w, site, d), z, fd_step))


def reproject(chart: DarbouxChart, z) -> np.ndarray:
    """Re-impose the constraints the exact flow preserves.

    Centers ``p`` and ``q``, restores ``a.b = xi`` per spin and, for the
    periodic chain, the zero Cartan moment.  With ``w_ik = a_i^(k) b_i^(k)``
    both constraint families are linear in ``w``; the minimum-norm correction
    is a double-centering of the residuals, applied through ``b``.
    """
    z = np.array(z, dtype=float)
    s = chart.slices
    N, n = chart.N, chart.n
    z[s["q"]] -= z[s["q"]].mean()
    z[s["p"]] -= z[s["p"]].mean()
    if n == 0:
        return z
    A = z[s["a"]].reshape(n, N)
    B = z[s["b"]].reshape(n, N).copy()
    xi = np.asarray(chart.xis)
    W = (A * B).T  # (N, n)
    if chart.kind == "periodic":
        col = W.sum(axis=0) - xi
        row = W.sum(axis=1) - xi.sum() / N
        tot = col.sum()
        dW = -(row[:, None] / n + col[None, :] / N - tot / (n * N))
        B = B + dW.T / A
    else:
        col = (A * B).sum(axis=1) - xi
        B = B - (col / (A * A).sum(axis=1))[:, None] * A
    z[s["b"]] = B.ravel()
    return z


def _gaps(q) -> np.ndarray:
    iu = np.triu_indices(q.size, 1)
    return (q[:, None] - q[None, :])[iu]


def _check(chart, z, t, order=None):
    """Finite, regular and (if ``order`` is given) still in the same Weyl chamber."""
    q = z[chart.slices["q"]]
    if not np.all(np.isfinite(z)):
        raise IntegrationError(f"non-finite state at t={t:.6g}", time=t)
    if not is_regular(q, chart.reg_eps):
        raise RegularityError(f"lost regularity at t={t:.6g} (min gap {min_gap(q):.3e})")
    if order is not None and np.any(np.sign(_gaps(q)) != order):
        raise RegularityError(f"q crossed a wall q_i = q_j before t={t:.6g}")


def _wall_events(chart):
    """One terminal event per pair ``q_i - q_j``; a sign change means a collision."""
    qs = chart.slices["q"]
    events = []
    for i, j in zip(*np.triu_indices(chart.N, 1)):
        ev = lambda t, w, i=qs.start + i, j=qs.start + j: w[i] - w[j]  # noqa: E731
        ev.terminal = True
        events.append(ev)
    return events


def _rk4_step(f, z, h):
    k1 = f(z)
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _midpoint_step(f, z, h, tol, maxiter):
    znew = z + h * f(z)
    for _ in range(maxiter):
        nxt = z + h * f(0.5 * (z + znew))
        if np.abs(nxt - znew).max() <= tol * max(1.0, np.abs(nxt).max()):
            return nxt
        znew = nxt
    raise IntegrationError("implicit midpoint iteration did not converge")


def integrate(
    state: RadialState,
    site: int,
    d: int,
    T: float,
    cfg: IntegratorConfig | None = None,
    chart: DarbouxChart | None = None,
) -> Trajectory:
    """Integrate the flow of ``Tr((x^(site))^d)`` for time ``T`` (negative runs backwards).

    Raises :class:`IntegrationError` with the partial trajectory attached if
    the state leaves the regular stratum.
    """
    cfg = cfg or IntegratorConfig()
    chart = chart or chart_for(state)
    if site not in chart.sites:
        raise IndexError(f"site {site} not in {list(chart.sites)}")
    if not 2 <= d <= chart.N:
        raise ValueError(f"degree must satisfy 2 <= d <= N={chart.N}, got {d}")
    f = hamiltonian_vector_field(chart, site, d, cfg.gradient, cfg.fd_step)
    z = chart.to_flat(state)
    meta = {"scheme": cfg.scheme, "hamiltonian": {"site": site, "degree": d}, "config": cfg.to_dict(), "T": T}
    times = [0.0]
    zs = [z.copy()]

    def finish():
        return Trajectory(np.array(times), [chart.from_flat(w, tol=1e-7) for w in zs], meta)

    if T == 0:
        return finish()
    sgn = 1.0 if T > 0 else -1.0
    order = np.sign(_gaps(z[chart.slices["q"]]))
    try:
        if cfg.scheme == "dop853":
            nsave = max(1, int(np.ceil(abs(T) / (cfg.dt * cfg.save_every))))
            t_eval = np.linspace(0.0, T, nsave + 1)
            sol = solve_ivp(
                lambda t, w: f(w),
                (0.0, T),
                z,
                method="DOP853",
                t_eval=t_eval,
                rtol=cfg.rtol,
                atol=cfg.atol,
                events=_wall_events(chart),
            )
            for t, w in zip(sol.t[1:], sol.y.T[1:]):
                if cfg.project:
                    w = reproject(chart, w)
                _check(chart, w, t, order)
                times.append(float(t))
                zs.append(w)
            if sol.status == 1:
                hit = min((float(te[0]) for te in sol.t_events if len(te)), key=abs)
                raise IntegrationError(f"q reached a wall q_i = q_j at t={hit:.6g}", time=hit)
            if not sol.success:
                raise IntegrationError(f"adaptive integrator failed: {sol.message}", time=float(sol.t[-1]))
            return finish()
        nsteps = max(1, int(np.ceil(abs(T) / cfg.dt - 1e-9)))
        h = T / nsteps
        for k in range(1, nsteps + 1):
            if cfg.scheme == "rk4":
                z = _rk4_step(f, z, h)
            else:
                z = _midpoint_step(f, z, h, cfg.midpoint_tol, cfg.midpoint_maxiter)
            if cfg.project:
                z = reproject(chart, z)
            t = k * h
            _check(chart, z, t, order)
            if k % cfg.save_every == 0 or k == nsteps:
                times.append(sgn * abs(t))
                zs.append(z.copy())
    except (RegularityError, IntegrationError) as exc:
        t_fail = getattr(exc, "time", None)
        if t_fail is None:
            t_fail = times[-1]
        raise IntegrationError(str(exc), time=t_fail, partial=finish()) from exc
    return finish()
