"""Flat Darboux-style charts on the radial phase spaces and their Poisson tensors.

Layout of the flat vector ``z`` (both chains)::

    q (N) | p (N) | a^(1..n) (n*N) | b^(1..n) (n*N) | l (N(N-1)/2) | r (N(N-1)/2)

The trailing ``l`` and ``r`` blocks (strict upper triangles of the boundary
matrices ``mu_left`` and ``mu_right``) exist for the open chain only.

Brackets, all with the Killing normalization ``(x, y) = 2N Tr(xy)``:

* ``{q_i, p_j} = (delta_ij - 1/N) / (2N)`` (the Cartan block, traceless);
* ``{a_i, b_j} = delta_ij / (2N)`` inside each spin, which makes
  ``mu = b a^T - xi/N`` Lie-Poisson with
  ``{mu_ij, mu_kl} = (delta_jk mu_il - delta_li mu_kj) / (2N)``;
* the boundary matrices carry the same Lie-Poisson bracket restricted to so(N)*.

The relative orientation of the two kinds of blocks is the one under which
integrating these vector fields reproduces the exact projection-method flow.

With these, the quadratic Hamiltonian ``(x, x)/2`` moves ``q`` with velocity ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..openchain import OpenRadialState, x_open_matrices, x_open_vjp
from ..orbits import KOrbitPoint, RankOneOrbitPoint, spin_matrix
from ..periodic import PeriodicRadialState, x_matrices, x_matrix_vjp

__all__ = ["DarbouxChart", "chart_for", "RadialState"]

RadialState = Union[PeriodicRadialState, OpenRadialState]


@dataclass(frozen=True)
class DarbouxChart:
    kind: str
    N: int
    n: int
    xis: tuple[float, ...]
    reg_eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("periodic", "open"):
            raise ValueError(f"chart kind must be 'periodic' or 'open', got {self.kind!r}")
        if len(self.xis) != self.n:
            raise ValueError("one orbit parameter per site is required")
        if self.kind == "periodic" and self.n < 1:
            raise ValueError("periodic chain needs n >= 1")

    @property
    def n_tri(self) -> int:
        return self.N * (self.N - 1) // 2 if self.kind == "open" else 0

    @property
    def dim(self) -> int:
        return 2 * self.N + 2 * self.n * self.N + 2 * self.n_tri

    @property
    def slices(self) -> dict[str, slice]:
        N, n, t = self.N, self.n, self.n_tri
        o = 0
        out = {}
        for name, size in (("q", N), ("p", N), ("a", n * N), ("b", n * N), ("l", t), ("r", t)):
            out[name] = slice(o, o + size)
            o += size
        return out

    def pairs(self) -> list[tuple[int, int]]:
        """Conjugate index pairs ``(coordinate, momentum)`` of the canonical blocks."""
        s = self.slices
        qp = [(s["q"].start + i, s["p"].start + i) for i in range(self.N)]
        ab = [(s["a"].start + i, s["b"].start + i) for i in range(self.n * self.N)]
        return qp + ab

    # --- packing -------------------------------------------------------------
    def to_flat(self, state: RadialState) -> np.ndarray:
        z = np.zeros(self.dim)
        s = self.slices
        z[s["q"]] = state.q
        z[s["p"]] = state.p
        for k, sp in enumerate(state.spins):
            if not isinstance(sp, RankOneOrbitPoint):
                raise TypeError("Darboux charts need rank-one spins in (a, b) form")
            z[s["a"]][k * self.N : (k + 1) * self.N] = sp.a
            z[s["b"]][k * self.N : (k + 1) * self.N] = sp.b
        if self.kind == "open":
            iu = np.triu_indices(self.N, 1)
            z[s["l"]] = state.L[iu]
            z[s["r"]] = state.R[iu]
        return z

    def from_flat(self, z, tol: float = 1e-8) -> RadialState:
        s = self.slices
        z = np.asarray(z, dtype=float)
        A = z[s["a"]].reshape(self.n, self.N)
        B = z[s["b"]].reshape(self.n, self.N)
        spins = tuple(RankOneOrbitPoint(xi, a, b, tol=tol) for xi, a, b in zip(self.xis, A, B))
        if self.kind == "periodic":
            return PeriodicRadialState(spins, z[s["p"]], z[s["q"]], reg_eps=self.reg_eps, tol=tol)
        return OpenRadialState(
            KOrbitPoint(self._antisym(z[s["l"]])),
            spins,
            KOrbitPoint(self._antisym(z[s["r"]])),
            z[s["p"]],
            z[s["q"]],
            reg_eps=self.reg_eps,
            tol=tol,
        )

    def _antisym(self, upper) -> np.ndarray:
        m = np.zeros((self.N, self.N))
        m[np.triu_indices(self.N, 1)] = upper
        return m - m.T

    def unpack(self, z):
        """``(L, mus, R, p, q, A, B)`` arrays from a flat vector (no validation)."""
        s = self.slices
        z = np.asarray(z, dtype=float)
        A = z[s["a"]].reshape(self.n, self.N)
        B = z[s["b"]].reshape(self.n, self.N)
        xi = np.asarray(self.xis, dtype=float)
        mus = np.einsum("ki,kj->kij", B, A) - (xi / self.N)[:, None, None] * np.eye(self.N)[None]
        if self.kind == "open":
            L, R = self._antisym(z[s["l"]]), self._antisym(z[s["r"]])
        else:
            L = R = None
        return L, mus, R, z[s["p"]], z[s["q"]], A, B

    # --- site momenta and Casimir Hamiltonians -------------------------------
    @property
    def sites(self) -> range:
        return range(1, self.n + 1) if self.kind == "periodic" else range(0, self.n + 1)

    def x_all(self, z) -> np.ndarray:
        L, mus, R, p, q, _, _ = self.unpack(z)
        if self.kind == "periodic":
            return x_matrices(mus, p, q)
        return x_open_matrices(L, mus, R, p, q)

    def x_site(self, z, k: int) -> np.ndarray:
        xs = self.x_all(z)
        return xs[k - 1] if self.kind == "periodic" else xs[k]

    def pullback(self, z, k: int, G) -> np.ndarray:
        """Chart gradient of ``F(x^(k))`` given the entrywise gradient ``G = dF/dx^(k)``."""
        L, mus, R, p, q, A, B = self.unpack(z)
        s = self.slices
        out = np.zeros(self.dim)
        if self.kind == "periodic":
            dmus, dp, dq = x_matrix_vjp(mus, p, q, k, G)
        else:
            dL, dmus, dR, dp, dq = x_open_vjp(L, mus, R, p, q, k, G)
            iu = np.triu_indices(self.N, 1)
            out[s["l"]] = (dL - dL.T)[iu]
            out[s["r"]] = (dR - dR.T)[iu]
        out[s["q"]] = dq
        out[s["p"]] = dp
        # mu = b a^T - xi/N: dF/db = Gmu a, dF/da = Gmu^T b
        out[s["a"]] = np.einsum("kij,ki->kj", dmus, B).ravel()
        out[s["b"]] = np.einsum("kij,kj->ki", dmus, A).ravel()
        return out

    def casimir_value(self, z, k: int, d: int) -> float:
        x = self.x_site(z, k)
        return float(np.trace(np.linalg.matrix_power(x, d)))

    def casimir_grad(self, z, k: int, d: int) -> np.ndarray:
        x = self.x_site(z, k)
        G = d * np.linalg.matrix_power(x, d - 1).T
        return self.pullback(z, k, G)

    # --- Poisson tensor ------------------------------------------------------
    def poisson_apply(self, z, grad) -> np.ndarray:
        """``Pi(z) @ grad``: the Hamiltonian vector field of a function with chart gradient ``grad``."""
        N = self.N
        s = self.slices
        z = np.asarray(z, dtype=float)
        grad = np.asarray(grad, dtype=float)
        out = np.zeros(self.dim)
        c = 1.0 / (2.0 * N)
        gq, gp = grad[s["q"]], grad[s["p"]]
        out[s["q"]] = c * (gp - gp.mean())
        out[s["p"]] = -c * (gq - gq.mean())
        out[s["a"]] = c * grad[s["b"]]
        out[s["b"]] = -c * grad[s["a"]]
        if self.kind == "open":
            iu = np.triu_indices(N, 1)
            for key in ("l", "r"):
                M = self._antisym(z[s[key]])
                xi = self._antisym(-grad[s[key]] / (4.0 * N))
                out[s[key]] = (M @ xi - xi @ M)[iu]
        return out

    def poisson_matrix(self, z) -> np.ndarray:
        eye = np.eye(self.dim)
        return np.column_stack([self.poisson_apply(z, e) for e in eye])


def chart_for(state: RadialState) -> DarbouxChart:
    xis = []
    for sp in state.spins:
        if not isinstance(sp, RankOneOrbitPoint):
            raise TypeError("Darboux charts need rank-one spins in (a, b) form")
        xis.append(sp.xi)
    kind = "periodic" if isinstance(state, PeriodicRadialState) else "open"
    return DarbouxChart(kind, state.N, state.n, tuple(xis), reg_eps=state.reg_eps)


def spin_matrices(state: RadialState) -> np.ndarray:
    return np.array([spin_matrix(s) for s in state.spins])
