"""Observables on the radial charts and their Poisson brackets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chart import DarbouxChart, RadialState, chart_for
from .integrate import fd_gradient

__all__ = [
    "Observable",
    "poisson_bracket",
    "bracket_flat",
    "hamiltonian_observable",
    "coordinate_observable",
    "spin_entry_observable",
    "bracket_observable",
]


@dataclass(frozen=True)
class Observable:
    """A function of the flat chart vector, with an optional analytic gradient."""

    value: Callable[[DarbouxChart, np.ndarray], float]
    grad: Optional[Callable[[DarbouxChart, np.ndarray], np.ndarray]] = None
    label: str = "F"

    def __call__(self, chart, z) -> float:
        return float(self.value(chart, z))

    def gradient(self, chart, z, mode: str = "analytic", fd_step: float = 1e-6) -> np.ndarray:
        if mode == "analytic" and self.grad is not None:
            g = np.asarray(self.grad(chart, z), dtype=float)
        elif mode in ("analytic", "fd"):
            g = fd_gradient(lambda w: self.value(chart, w), z, fd_step)
        else:
            raise ValueError(f"gradient mode must be 'analytic' or 'fd', got {mode!r}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"gradient of {self.label} is not finite")
        return g

    def __mul__(self, other: "Observable") -> "Observable":
        def grad(chart, z):
            if self.grad is None or other.grad is None:
                return fd_gradient(lambda w: self.value(chart, w) * other.value(chart, w), z, 1e-6)
            return self.value(chart, z) * other.grad(chart, z) + other.value(chart, z) * self.grad(chart, z)

        return Observable(lambda c, z: self.value(c, z) * other.value(c, z), grad, f"({self.label})*({other.label})")

    def __add__(self, other: "Observable") -> "Observable":
        grad = None
        if self.grad is not None and other.grad is not None:
            grad = lambda c, z: self.grad(c, z) + other.grad(c, z)  # noqa: E731
        return Observable(lambda c, z: self.value(c, z) + other.value(c, z), grad, f"{self.label}+{other.label}")


def bracket_flat(chart: DarbouxChart, z, F: Observable, G: Observable, mode="analytic", fd_step=1e-6) -> float:
    gF = F.gradient(chart, z, mode, fd_step)
    gG = G.gradient(chart, z, mode, fd_step)
    return float(gF @ chart.poisson_apply(z, gG))


def poisson_bracket(
    F: Observable,
    G: Observable,
    state: RadialState,
    chart: DarbouxChart | None = None,
    mode: str = "analytic",
    fd_step: float = 1e-6,
    units: str = "killing",
) -> float:
    """``{F, G}`` at ``state``.

    ``units="killing"`` uses the chart brackets as built (``{a_i, b_j} = delta_ij / 2N``);
    ``units="matrix"`` rescales by ``2N`` so that ``{a_i, b_j} = delta_ij``.
    """
    chart = chart or chart_for(state)
    val = bracket_flat(chart, chart.to_flat(state), F, G, mode, fd_step)
    if units == "matrix":
        return 2.0 * chart.N * val
    if units != "killing":
        raise ValueError(f"units must be 'killing' or 'matrix', got {units!r}")
    return val


def hamiltonian_observable(site: int, d: int) -> Observable:
    return Observable(
        lambda c, z: c.casimir_value(z, site, d),
        lambda c, z: c.casimir_grad(z, site, d),
        f"H_{d}^({site})",
    )


def coordinate_observable(block: str, index: int) -> Observable:
    """A single chart coordinate, e.g. ``("a", k * N + i)`` or ``("q", i)``."""

    def pos(c):
        sl = c.slices[block]
        if not 0 <= index < sl.stop - sl.start:
            raise IndexError(f"{block}[{index}] out of range")
        return sl.start + index

    def grad(c, z):
        g = np.zeros(c.dim)
        g[pos(c)] = 1.0
        return g

    return Observable(lambda c, z: float(np.asarray(z)[pos(c)]), grad, f"{block}[{index}]")


def spin_entry_observable(k: int, i: int, j: int) -> Observable:
    """Entry ``mu^(k)_ij = b_i a_j - delta_ij xi/N`` of the ``k``-th spin (0-based ``k``)."""

    def value(c, z):
        return float(c.unpack(z)[1][k, i, j])

    def grad(c, z):
        s = c.slices
        z = np.asarray(z, dtype=float)
        g = np.zeros(c.dim)
        g[s["b"].start + k * c.N + i] += z[s["a"].start + k * c.N + j]
        g[s["a"].start + k * c.N + j] += z[s["b"].start + k * c.N + i]
        return g

    return Observable(value, grad, f"mu^({k + 1})_{i}{j}")


def bracket_observable(F: Observable, G: Observable, mode: str = "analytic", fd_step: float = 1e-6) -> Observable:
    """``{F, G}`` as an observable (gradient by finite differences)."""
    return Observable(lambda c, z: bracket_flat(c, z, F, G, mode, fd_step), None, f"{{{F.label},{G.label}}}")
