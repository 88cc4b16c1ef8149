"""Discrete complex Lorenz map: orbits, equilibria, Lyapunov spectra and regime labels."""

from .classifier import RegimeLabel, classify, coexisting_attractors
from .equilibria import classify_equilibrium, eigenvalues3, fixed_points, jacobian_at
from .experiments import export_plot_data, load_suite, run_suite
from .lorenz_map import Orbit, apply_symmetry, iterate, iterate_real, step
from .lyapunov import LyapunovSettings, spectrum
from .types import OrbitConfig, ParameterError, State3, SystemParams, parse_complex, parse_params

__version__ = "0.1.0"

__all__ = [
    "Orbit",
    "OrbitConfig",
    "ParameterError",
    "RegimeLabel",
    "State3",
    "SystemParams",
    "LyapunovSettings",
    "apply_symmetry",
    "classify",
    "classify_equilibrium",
    "coexisting_attractors",
    "eigenvalues3",
    "export_plot_data",
    "fixed_points",
    "iterate",
    "iterate_real",
    "jacobian_at",
    "load_suite",
    "parse_complex",
    "parse_params",
    "run_suite",
    "spectrum",
    "step",
]
