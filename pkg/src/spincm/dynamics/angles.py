"""Angle variables on the extended space.

Periodic chains use the defining representation: with ``s_i`` the det-1
matrix taking ``x_i`` to descending diagonal form,

    f = prod_i (s_i g_i s_{i+1}^-1)[j_i, j_{i+1}]        (indices cyclic).

Open chains use the symmetric square, where ``e_j (x) e_j`` is fixed by every
det-1 sign matrix.  There ``s_0`` and ``s_{n+1}`` are rotations diagonalizing
the symmetric parts of ``x_0`` and ``Ad_{g_n^-1} x_n``, and each factor is the
square of the corresponding matrix entry.

Along the flow of ``c_d(x_i)`` the factor touching ``g_i`` picks up
``exp(t * grad c_d(y_i)[j_i, j_i])`` (squared for the open chain), with
``y_i`` the diagonal form of ``x_i``.  Only ``log|f|`` is tracked; the sign is
reported separately so crossings can be flagged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..liealg import adjoint_star, gradient_invariant
from .extended import ExtendedState

__all__ = [
    "AngleError",
    "AngleValue",
    "angle_periodic",
    "angle_open",
    "angle",
    "angle_slope",
    "diagonalizer",
    "rotation_diagonalizer",
    "sign_group",
    "assert_m_invariant",
    "track_angle",
]


class AngleError(ValueError):
    """Spectrum not real and simple, or the chosen matrix element vanishes."""


@dataclass(frozen=True)
class AngleValue:
    log_abs: float
    sign: int


def diagonalizer(x, rel_gap: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """``(s, lam)`` with ``s x s^-1 = diag(lam)``, ``lam`` descending and ``det s = 1``."""
    x = np.asarray(x, dtype=float)
    w, V = np.linalg.eig(x)
    scale = max(1.0, float(np.abs(w).max()))
    if np.abs(w.imag).max() > 1e-10 * scale:
        raise AngleError(f"spectrum is not real: {w}")
    w = w.real
    order = np.argsort(-w)
    w, V = w[order], V[:, order].real
    if np.min(-np.diff(w)) <= rel_gap * scale:
        raise AngleError(f"spectrum is degenerate: {w}")
    s = np.linalg.inv(V)
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    det = np.linalg.det(s)
    if det < 0:
        s[0] = -s[0]
        det = -det
    return s / det ** (1.0 / s.shape[0]), w


def rotation_diagonalizer(x, rel_gap: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Rotation ``k`` with ``k sym(x) k^T`` diagonal and descending."""
    x = np.asarray(x, dtype=float)
    w, V = np.linalg.eigh(0.5 * (x + x.T))
    w, V = w[::-1], V[:, ::-1]
    scale = max(1.0, float(np.abs(w).max()))
    if np.min(-np.diff(w)) <= rel_gap * scale:
        raise AngleError(f"symmetric part has a degenerate spectrum: {w}")
    k = V.T.copy()
    if np.linalg.det(k) < 0:
        k[0] = -k[0]
    return k, w


def sign_group(N: int) -> np.ndarray:
    """All ``2^(N-1)`` diagonal sign matrices of determinant one, as sign vectors."""
    out = []
    for bits in itertools.product((1.0, -1.0), repeat=N - 1):
        last = float(np.prod(bits))
        out.append(bits + (last,))
    return np.array(out)


def assert_m_invariant(j: int, N: int) -> None:
    """Check that ``e_j (x) e_j`` is fixed by every det-1 sign matrix (exact equality)."""
    v = np.zeros((N, N))
    v[j, j] = 1.0
    for m in sign_group(N):
        if not np.array_equal(m[:, None] * v * m[None, :], v):
            raise AssertionError(f"e_{j} (x) e_{j} is not invariant under signs {m}")


def _factor(s_left, g, s_right, r, c, name):
    m = s_left @ g @ np.linalg.inv(s_right)
    val = m[r, c]
    if not np.isfinite(val) or abs(val) <= 1e-13 * max(1.0, float(np.abs(m).max())):
        raise AngleError(f"matrix element {name}[{r}, {c}] vanishes; pick other weight vectors")
    return val


def _check_weights(weights, count, N):
    js = tuple(int(j) for j in weights)
    if len(js) != count:
        raise ValueError(f"need {count} weight indices, got {len(js)}")
    if any(not 0 <= j < N for j in js):
        raise ValueError(f"weight indices must lie in 0..{N - 1}")
    return js


def _frames_periodic(es):
    return [diagonalizer(x)[0] for x in es.x]


def _frames_open(es):
    n = es.n
    frames = [rotation_diagonalizer(es.x[0])[0]]
    frames += [diagonalizer(es.x[i])[0] for i in range(1, n + 1)]
    frames.append(rotation_diagonalizer(adjoint_star(np.linalg.inv(es.g[n]), es.x[n]))[0])
    return frames


def angle_periodic(es: ExtendedState, weights: Sequence[int]) -> AngleValue:
    """``log|f|`` and ``sign f`` for weight indices ``(j_1, ..., j_n)``."""
    if es.kind != "periodic":
        raise ValueError("angle_periodic needs a periodic extended state")
    n, N = es.n, es.N
    js = _check_weights(weights, n, N)
    s = _frames_periodic(es)
    logs, sign = 0.0, 1
    for i in range(n):
        val = _factor(s[i], es.g[i], s[(i + 1) % n], js[i], js[(i + 1) % n], f"site {i + 1}")
        logs += np.log(abs(val))
        sign *= 1 if val > 0 else -1
    return AngleValue(float(logs), sign)


def angle_open(es: ExtendedState, weights: Sequence[int]) -> AngleValue:
    """``log|f|`` for weight indices ``(j_0, j_1, ..., j_n, j_{n+1})`` in the symmetric square.

    The boundary vectors are asserted to be invariant under the sign group.
    Every factor is a square, so ``sign`` is always +1.
    """
    if es.kind != "open":
        raise ValueError("angle_open needs an open extended state")
    n, N = es.n, es.N
    js = _check_weights(weights, n + 2, N)
    assert_m_invariant(js[0], N)
    assert_m_invariant(js[-1], N)
    s = _frames_open(es)
    logs = 0.0
    for i in range(n + 1):
        val = _factor(s[i], es.g[i], s[i + 1], js[i], js[i + 1], f"site {i}")
        logs += 2.0 * np.log(abs(val))
    return AngleValue(float(logs), 1)


def angle(es: ExtendedState, weights: Sequence[int]) -> AngleValue:
    return angle_periodic(es, weights) if es.kind == "periodic" else angle_open(es, weights)


def angle_slope(es: ExtendedState, site: int, d: int, weights: Sequence[int]) -> float:
    """Exact rate of change of ``log|f|`` along the flow of ``c_d(x_site)``."""
    j = es.site(site)
    if es.kind == "periodic":
        js = _check_weights(weights, es.n, es.N)
        lam = diagonalizer(es.x[j])[1]
        return float(gradient_invariant(d, np.diag(lam))[js[j], js[j]])
    js = _check_weights(weights, es.n + 2, es.N)
    x = es.x[j]
    if j == 0:
        if np.abs(x - x.T).max() > 1e-12 * max(1.0, float(np.abs(x).max())):
            raise AngleError("site-0 flows need a symmetric x_0 (zero left boundary moment)")
        lam = rotation_diagonalizer(x)[1]
    else:
        lam = diagonalizer(x)[1]
    return 2.0 * float(gradient_invariant(d, np.diag(lam))[js[j], js[j]])


def track_angle(states: Sequence[ExtendedState], weights: Sequence[int]) -> tuple[np.ndarray, np.ndarray, bool]:
    """``(log|f|, signs, crossed)`` along a sequence of extended states."""
    vals = [angle(es, weights) for es in states]
    logs = np.array([v.log_abs for v in vals])
    signs = np.array([v.sign for v in vals])
    return logs, signs, bool(np.any(signs != signs[0]))
