"""
Desk-scale toolkit for state transitions of the stochastic Morris-Lecar
neuron under symmetric alpha-stable noise: deterministic phase portrait,
nonlocal Fokker-Planck density evolution, maximal likely trajectories,
(alpha, sigma) phase diagrams and a Monte Carlo cross-check.
"""
from . import fp_solver, mlt, model, montecarlo, stable_noise

__version__ = "0.1.0"

from . import cli_io  # noqa: E402  (needs __version__ defined first)

__all__ = ["model", "stable_noise", "fp_solver", "mlt", "montecarlo",
           "cli_io", "__version__"]
