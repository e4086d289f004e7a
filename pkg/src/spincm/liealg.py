"""Root data, Killing form and matrix-group helpers for sl_N(R) / SL_N(R).

Algebra elements are plain traceless ``(N, N)`` float arrays; the dual space is
identified with the algebra through the Killing form ``(x, y) = 2N Tr(xy)``.
Group elements are ``(N, N)`` arrays with unit determinant.

Conventions used throughout the package:

* roots are ordered pairs ``(i, j)``, ``i != j``, standing for ``eps_i - eps_j``;
  a root is positive when ``i < j``;
* the root vector for ``(i, j)`` is ``E_ij / sqrt(2N)`` so that
  ``(e_alpha, e_-alpha) = 1``;
* the root coordinate of ``y`` is ``y_alpha = y(e_-alpha) = sqrt(2N) y_ij``;
* the fundamental Weyl chamber is ``q_1 > q_2 > ... > q_N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations

import numpy as np
from scipy.linalg import expm

__all__ = [
    "LieContext",
    "killing_form",
    "root_coordinate",
    "root_coordinates",
    "cartan_component",
    "from_coordinates",
    "adjoint_star",
    "cartan_involution_alg",
    "project_k",
    "k_coordinate",
    "casimir",
    "gradient_invariant",
    "quadratic_hamiltonian",
    "to_matrix_units",
    "is_regular",
    "min_gap",
    "check_algebra",
    "check_group",
    "random_algebra",
    "random_group",
    "random_rotation",
    "group_exp",
]


@dataclass(frozen=True)
class LieContext:
    """A_{N-1} root and normalization data for a fixed matrix size."""

    N: int
    reg_eps: float = 1e-8

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")

    @property
    def rank(self) -> int:
        return self.N - 1

    @property
    def killing_scale(self) -> float:
        return 2.0 * self.N

    @cached_property
    def roots(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, j) for i in range(self.N) for j in range(self.N) if i != j)

    @cached_property
    def positive_roots(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, j) for (i, j) in self.roots if i < j)

    def root_vector(self, root: tuple[int, int]) -> np.ndarray:
        i, j = root
        e = np.zeros((self.N, self.N))
        e[i, j] = 1.0 / np.sqrt(self.killing_scale)
        return e

    def weyl_group(self):
        """Iterate over S_N as index permutations."""
        return permutations(range(self.N))


def _size(x: np.ndarray) -> int:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    return x.shape[0]


def killing_form(x, y) -> float:
    """Killing form ``2N Tr(xy)`` on sl_N."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    N = _size(x)
    # Tr(xy) without forming the product
    return 2.0 * N * float(np.einsum("ij,ji->", x, y))


def root_coordinate(y, root: tuple[int, int]) -> float:
    y = np.asarray(y, dtype=float)
    i, j = root
    if i == j:
        raise ValueError("diagonal index pair is not a root")
    return float(np.sqrt(2.0 * _size(y)) * y[i, j])


def root_coordinates(y) -> np.ndarray:
    """All root coordinates as an (N, N) array with zero diagonal."""
    y = np.asarray(y, dtype=float)
    out = np.sqrt(2.0 * _size(y)) * y
    np.fill_diagonal(out, 0.0)
    return out


def cartan_component(y) -> np.ndarray:
    return np.diag(np.asarray(y, dtype=float)).copy()


def from_coordinates(cartan, coords) -> np.ndarray:
    """Inverse of (cartan_component, root_coordinates): ``y0 + sum y_a e_a``."""
    coords = np.asarray(coords, dtype=float)
    N = coords.shape[0]
    y = coords / np.sqrt(2.0 * N)
    np.fill_diagonal(y, np.asarray(cartan, dtype=float))
    return y


def adjoint_star(g, x) -> np.ndarray:
    """Coadjoint action; under the Killing identification this is ``g x g^-1``."""
    g = np.asarray(g, dtype=float)
    x = np.asarray(x, dtype=float)
    # (g x) g^-1 computed as solve(g^T, (g x)^T)^T
    return np.linalg.solve(g.T, (g @ x).T).T


def cartan_involution_alg(x) -> np.ndarray:
    return -np.asarray(x, dtype=float).T


def project_k(x) -> np.ndarray:
    """Projection g* -> k* (antisymmetric part)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (x - x.T)


def k_coordinate(y, root: tuple[int, int]) -> float:
    """``y_[alpha] = y(e_-alpha - e_alpha)`` for ``y`` in k* (or g*)."""
    y = np.asarray(y, dtype=float)
    i, j = root
    return float(np.sqrt(2.0 * _size(y)) * (y[i, j] - y[j, i]))


def casimir(d: int, x) -> float:
    """Degree-d invariant ``Tr(x^d)``."""
    x = np.asarray(x, dtype=float)
    N = _size(x)
    if not 2 <= d <= N:
        raise ValueError(f"degree must satisfy 2 <= d <= N={N}, got {d}")
    return float(np.trace(np.linalg.matrix_power(x, d)))


def gradient_invariant(d: int, x) -> np.ndarray:
    """Killing-dual gradient of ``Tr(x^d)``.

    The returned traceless matrix ``G`` satisfies
    ``killing_form(y, G) = d/dt Tr((x + t y)^d)`` at ``t = 0``.
    """
    x = np.asarray(x, dtype=float)
    N = _size(x)
    if not 2 <= d <= N:
        raise ValueError(f"degree must satisfy 2 <= d <= N={N}, got {d}")
    xp = np.linalg.matrix_power(x, d - 1)
    xp = xp - np.trace(xp) / N * np.eye(N)
    return d / (2.0 * N) * xp


def quadratic_hamiltonian(x) -> float:
    """``H(x) = (x, x) / 2``; its Killing-dual gradient is ``x`` itself."""
    return 0.5 * killing_form(x, x)


def to_matrix_units(value: float, N: int) -> float:
    """Rescale a Killing-normalized quantity by ``1/(2N)`` (matrix-trace units)."""
    return value / (2.0 * N)


def min_gap(q) -> float:
    q = np.sort(np.asarray(q, dtype=float))
    return float(np.min(np.diff(q))) if q.size > 1 else np.inf


def is_regular(q, eps: float = 1e-8) -> bool:
    """All pairwise gaps exceed ``eps`` relative to the scale of ``q``."""
    q = np.asarray(q, dtype=float)
    scale = max(1.0, float(np.max(np.abs(q))))
    return min_gap(q) > eps * scale


def check_algebra(x, tol: float = 1e-9) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    _size(x)
    if abs(np.trace(x)) > tol * max(1.0, np.max(np.abs(x))):
        raise ValueError(f"algebra element is not traceless (trace={np.trace(x):.3e})")
    return x


def check_group(g, tol: float = 1e-9) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    _size(g)
    det = np.linalg.det(g)
    if abs(det - 1.0) > tol * max(1.0, np.max(np.abs(g)) ** g.shape[0]):
        raise ValueError(f"group element must have determinant 1 (det={det:.12g})")
    return g


def random_algebra(N: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    x = scale * rng.standard_normal((N, N))
    return x - np.trace(x) / N * np.eye(N)


def group_exp(x) -> np.ndarray:
    return expm(np.asarray(x, dtype=float))


def random_group(N: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """A random SL_N(R) element, ``exp`` of a random algebra element."""
    return group_exp(random_algebra(N, rng, scale))


def random_rotation(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(N)."""
    z = rng.standard_normal((N, N))
    qm, r = np.linalg.qr(z)
    qm = qm * np.sign(np.diag(r))
    if np.linalg.det(qm) < 0:
        qm[:, 0] = -qm[:, 0]
    return qm
