"""Conditional qubit dynamics on the Riemann sphere.

Measurement-selected qubit evolution reduces, on pure states, to iterating a
one-parameter quadratic rational map of the sphere.  This package provides
the sphere arithmetic, the density-matrix channel it comes from, orbit and
cycle analysis with Lyapunov diagnostics, raster/sweep atlases of the
dynamical and parameter planes, the two-qubit extension, and a CLI.
"""

from .sphere import (
    INF,
    MapParam,
    SpherePoint,
    apply_map,
    as_point,
    chordal_distance,
    overlap_distance,
    spherical_derivative,
)
from .channel import (
    density_to_pure,
    p_from_angles,
    pure_to_density,
    purity,
    rotate,
    rotation_unitary,
    selection_probability,
    squaring_map,
    step_density,
    validate_density,
)
from .orbits import (
    BasinResult,
    ConfigurationError,
    CriticalReport,
    Cycle,
    LyapunovEstimate,
    Orbit,
    classify_basin,
    critical_orbits,
    cycle_multiplier,
    detect_cycle,
    find_periodic_points,
    iterate_orbit,
    lyapunov_derivative,
    lyapunov_overlap,
    make_cycle,
    periodic_cycles,
)
from .roots import RootFindingError
from .atlas import (
    Raster,
    Sweep,
    Window,
    bifurcation_sweep,
    render_julia,
    render_parameter_space,
)
from .twoqubit import (
    purification_trace,
    reduced_state,
    rotate_local,
    squaring4,
    step_two_qubit,
)

__version__ = "0.1.0"

__all__ = [
    "INF",
    "MapParam",
    "SpherePoint",
    "apply_map",
    "as_point",
    "chordal_distance",
    "overlap_distance",
    "spherical_derivative",
    "density_to_pure",
    "p_from_angles",
    "pure_to_density",
    "purity",
    "rotate",
    "rotation_unitary",
    "selection_probability",
    "squaring_map",
    "step_density",
    "validate_density",
    "BasinResult",
    "CriticalReport",
    "Cycle",
    "LyapunovEstimate",
    "Orbit",
    "classify_basin",
    "critical_orbits",
    "cycle_multiplier",
    "detect_cycle",
    "find_periodic_points",
    "iterate_orbit",
    "lyapunov_derivative",
    "lyapunov_overlap",
    "make_cycle",
    "periodic_cycles",
    "RootFindingError",
    "ConfigurationError",
    "Raster",
    "Sweep",
    "Window",
    "bifurcation_sweep",
    "render_julia",
    "render_parameter_space",
    "purification_trace",
    "reduced_state",
    "rotate_local",
    "squaring4",
    "step_two_qubit",
    "__version__",
]
