"""Periodic and open spin Calogero-Moser chains for SL_N(R)."""

from .openchain import OpenRadialState, random_open_state
from .orbits import KOrbitPoint, OrbitSpec, RankOneOrbitPoint
from .periodic import PeriodicRadialState, RegularityError, random_periodic_state

__version__ = "0.1.0"

__all__ = [
    "OpenRadialState",
    "PeriodicRadialState",
    "RankOneOrbitPoint",
    "KOrbitPoint",
    "OrbitSpec",
    "RegularityError",
    "random_open_state",
    "random_periodic_state",
    "__version__",
]
