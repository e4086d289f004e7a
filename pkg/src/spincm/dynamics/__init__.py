"""Time evolution on the radial charts and on the unreduced space."""

from .angles import AngleError, AngleValue, angle, angle_open, angle_periodic, angle_slope, track_angle
from .bracket import (
    Observable,
    coordinate_observable,
    hamiltonian_observable,
    poisson_bracket,
    spin_entry_observable,
)
from .chart import DarbouxChart, chart_for
from .extended import (
    ExtendedState,
    GaugeFixError,
    canonical_form,
    embed_extended,
    flow_extended,
    gauge_fix,
    gauge_fix_open,
    gauge_fix_periodic,
    gauge_transform,
    moment_map,
    radial_distance,
    random_gauge,
)
from .integrate import IntegrationError, IntegratorConfig, Trajectory, integrate
from .io import load_trajectory, save_trajectory

__all__ = [
    "AngleError",
    "AngleValue",
    "angle",
    "angle_open",
    "angle_periodic",
    "angle_slope",
    "track_angle",
    "Observable",
    "coordinate_observable",
    "hamiltonian_observable",
    "poisson_bracket",
    "spin_entry_observable",
    "DarbouxChart",
    "chart_for",
    "ExtendedState",
    "GaugeFixError",
    "canonical_form",
    "embed_extended",
    "flow_extended",
    "gauge_fix",
    "gauge_fix_open",
    "gauge_fix_periodic",
    "gauge_transform",
    "moment_map",
    "radial_distance",
    "random_gauge",
    "IntegrationError",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "load_trajectory",
    "save_trajectory",
]
