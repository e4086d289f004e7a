"""Rank-one coadjoint orbits, so(N) orbit points and the constrained spin sampler.

A rank-one orbit point is stored in Darboux form ``(a, b)`` with ``a.b = xi``;
the algebra element it represents is ``mu = b a^T - (xi/N) Id``.  The pair is
defined modulo ``(a, b) ~ (lam a, b / lam)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .liealg import random_rotation

__all__ = [
    "RankOneOrbitPoint",
    "MatrixOrbitPoint",
    "KOrbitPoint",
    "OrbitSpec",
    "embed_rank1",
    "normalize_gauge",
    "rank1_from_matrix",
    "spin_matrix",
    "chain_moment_residual",
    "sample_constrained",
    "sample_rank1",
    "local_spins",
    "k_normal_form",
    "sample_k_orbit",
    "so_spectrum",
    "ConstraintError",
]


class ConstraintError(ValueError):
    """An orbit or moment constraint is violated beyond tolerance."""


def _frozen(v) -> np.ndarray:
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class RankOneOrbitPoint:
    xi: float
    a: np.ndarray
    b: np.ndarray
    tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        a, b = _frozen(self.a), _frozen(self.b)
        if a.ndim != 1 or a.shape != b.shape or a.size < 2:
            raise ValueError(f"a and b must be equal-length vectors, got {a.shape}, {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "xi", float(self.xi))
        if self.xi == 0.0:
            raise ConstraintError("rank-one orbit parameter xi must be nonzero")
        resid = abs(float(a @ b) - self.xi)
        if resid > self.tol * max(1.0, abs(self.xi), float(np.abs(a).max() * np.abs(b).max())):
            raise ConstraintError(f"orbit constraint a.b = xi violated by {resid:.3e}")

    @property
    def N(self) -> int:
        return self.a.size

    @property
    def matrix(self) -> np.ndarray:
        return embed_rank1(self)

    def __repr__(self):
        return f"RankOneOrbitPoint(xi={self.xi!r}, a={self.a.tolist()}, b={self.b.tolist()})"


@dataclass(frozen=True, eq=False)
class MatrixOrbitPoint:
    """A generic orbit point given by its matrix; read-only (no Darboux chart)."""

    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))

    @property
    def N(self) -> int:
        return self.mu.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.mu)


def spin_matrix(spin) -> np.ndarray:
    if isinstance(spin, (RankOneOrbitPoint, MatrixOrbitPoint)):
        return spin.matrix
    return np.asarray(spin, dtype=float)


def embed_rank1(pt: RankOneOrbitPoint) -> np.ndarray:
    N = pt.a.size
    return np.outer(pt.b, pt.a) - pt.xi / N * np.eye(N)


def normalize_gauge(pt: RankOneOrbitPoint) -> RankOneOrbitPoint:
    """Canonical representative: ``|a| = |b|`` and first nonzero entry of ``a`` positive."""
    na = np.linalg.norm(pt.a)
    if na == 0.0:
        raise ConstraintError("cannot normalize a point with a = 0")
    lam = np.sqrt(np.linalg.norm(pt.b) / na)
    thresh = 1e-12 * na
    first = pt.a[np.flatnonzero(np.abs(pt.a) > thresh)[0]]
    if first < 0:
        lam = -lam
    return RankOneOrbitPoint(pt.xi, lam * pt.a, pt.b / lam, tol=pt.tol)


def rank1_from_matrix(mu, xi: float, tol: float = 1e-8) -> RankOneOrbitPoint:
    """Recover ``(a, b)`` from ``mu = b a^T - xi/N``; result is gauge-normalized."""
    mu = np.asarray(mu, dtype=float)
    N = mu.shape[0]
    r = mu + xi / N * np.eye(N)
    u, s, vt = np.linalg.svd(r)
    if s[0] == 0.0 or (N > 1 and s[1] > 1e-6 * s[0]):
        raise ConstraintError(f"matrix is not rank one after shift (singular values {s[:2]})")
    b = np.sqrt(s[0]) * u[:, 0]
    a = np.sqrt(s[0]) * vt[0]
    # a.b equals Tr(r) = xi up to rounding; fold the residual into b
    ab = a @ b
    if ab == 0.0:
        raise ConstraintError("degenerate rank-one factorization")
    b = b * (xi / ab)
    return normalize_gauge(RankOneOrbitPoint(xi, a, b, tol=tol))


def chain_moment_residual(spins: Sequence) -> np.ndarray:
    """Sum of the Cartan (diagonal) parts of the spins."""
    mats = [spin_matrix(s) for s in spins]
    Ns = {m.shape[0] for m in mats}
    if len(Ns) != 1:
        raise ValueError(f"spins have inconsistent sizes {sorted(Ns)}")
    return np.sum([np.diag(m) for m in mats], axis=0)


@dataclass(frozen=True)
class OrbitSpec:
    """Per-site orbit description: ``rank1`` with ``xi`` or ``k-orbit`` with a spectrum."""

    kind: str
    xi: float | None = None
    spectrum: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == "rank1":
            if self.xi is None or float(self.xi) == 0.0:
                raise ValueError("rank1 orbit needs a nonzero xi")
        elif self.kind == "k-orbit":
            if self.spectrum is None:
                raise ValueError("k-orbit needs a spectrum")
            object.__setattr__(self, "spectrum", tuple(float(s) for s in self.spectrum))
        else:
            raise ValueError(f"unknown orbit kind {self.kind!r}")

    @classmethod
    def rank1(cls, xi: float) -> "OrbitSpec":
        return cls("rank1", xi=float(xi))

    @classmethod
    def k_orbit(cls, spectrum) -> "OrbitSpec":
        return cls("k-orbit", spectrum=tuple(spectrum))


def _random_a(N: int, rng: np.random.Generator, low: float = 0.5, high: float = 1.5) -> np.ndarray:
    return rng.uniform(low, high, N) * rng.choice([-1.0, 1.0], N)


def sample_rank1(N: int, xi: float, rng: np.random.Generator, spread: float = 1.0) -> RankOneOrbitPoint:
    """Unconstrained random point of O^(xi)."""
    a = _random_a(N, rng)
    b = spread * rng.standard_normal(N)
    # shift b along a to meet a.b = xi
    b = b + (xi - a @ b) / (a @ a) * a
    return normalize_gauge(RankOneOrbitPoint(xi, a, b))


def sample_constrained(
    xis: Sequence[float] | Sequence[OrbitSpec],
    N: int,
    rng: np.random.Generator,
    spread: float = 0.5,
) -> list[RankOneOrbitPoint]:
    """Random spins on the zero level of the Cartan moment map.

    With ``w_ik = a_i^(k) b_i^(k)`` the constraints read: column sums of ``w``
    equal ``xi_k`` and row sums equal ``sum(xi)/N``.  A particular solution
    ``w_ik = xi_k / N`` plus a zero-margin perturbation covers the whole
    solution set, and ``b = w / a`` then satisfies both families exactly.
    """
    xs = np.array([s.xi if isinstance(s, OrbitSpec) else s for s in xis], dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("need at least one orbit parameter")
    if np.any(xs == 0.0) or not np.all(np.isfinite(xs)):
        raise ConstraintError("every orbit parameter must be finite and nonzero")
    n = xs.size
    w = np.tile(xs / N, (N, 1))
    e = spread * rng.standard_normal((N, n))
    e = e - e.mean(axis=0, keepdims=True) - e.mean(axis=1, keepdims=True) + e.mean()
    w = w + e
    spins = []
    for k in range(n):
        a = _random_a(N, rng)
        b = w[:, k] / a
        spins.append(normalize_gauge(RankOneOrbitPoint(xs[k], a, b)))
    return spins


def local_spins(spins: Sequence[RankOneOrbitPoint], tol: float = 1e-10) -> np.ndarray:
    """Per-particle spins ``g^(i)_{kl} = b_i^(k) a_i^(l) - delta_kl xi_tot/(N n)``.

    Returns an array of shape ``(N, n, n)``.
    """
    resid = chain_moment_residual(spins)
    scale = max(1.0, max(np.abs(s.matrix).max() for s in spins))
    if np.abs(resid).max() > tol * scale:
        raise ConstraintError(f"Cartan moment constraint violated by {np.abs(resid).max():.3e}")
    A = np.array([s.a for s in spins])  # (n, N)
    B = np.array([s.b for s in spins])
    n, N = A.shape
    xi_tot = sum(s.xi for s in spins)
    g = np.einsum("ki,li->ikl", B, A)
    g -= xi_tot / (N * n) * np.eye(n)[None]
    return g


def so_spectrum(m) -> np.ndarray:
    """Sorted invariant spectrum of an antisymmetric matrix: the ``floor(N/2)`` rotation rates."""
    m = np.asarray(m, dtype=float)
    s = np.linalg.svd(m, compute_uv=False)
    # singular values of a real antisymmetric matrix come in equal pairs
    return np.sort(s)[::-1][0 : 2 * (m.shape[0] // 2) : 2].copy()


def k_normal_form(spectrum, N: int) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.shape != (N // 2,) or np.any(spectrum < 0) or not np.all(np.isfinite(spectrum)):
        raise ValueError(f"so({N}) spectrum must be {N // 2} nonnegative numbers, got {spectrum}")
    m = np.zeros((N, N))
    for j, w in enumerate(spectrum):
        m[2 * j, 2 * j + 1] = w
        m[2 * j + 1, 2 * j] = -w
    return m


@dataclass(frozen=True, eq=False)
class KOrbitPoint:
    """An antisymmetric matrix, a point of a coadjoint so(N)-orbit."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("KOrbitPoint needs a square matrix")
        if np.abs(m + m.T).max() > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError("KOrbitPoint matrix must be antisymmetric")
        object.__setattr__(self, "matrix", m)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectrum(self) -> np.ndarray:
        return so_spectrum(self.matrix)

    @classmethod
    def zero(cls, N: int) -> "KOrbitPoint":
        return cls(np.zeros((N, N)))


def sample_k_orbit(spectrum, rng: np.random.Generator, N: int | None = None) -> KOrbitPoint:
    """Random point of the so(N)-orbit with the given rotation rates."""
    spectrum = np.atleast_1d(np.asarray(spectrum, dtype=float))
    if N is None:
        N = 2 * spectrum.size
    nf = k_normal_form(spectrum, N)
    k = random_rotation(N, rng)
    m = k @ nf @ k.T
    return KOrbitPoint(0.5 * (m - m.T))
