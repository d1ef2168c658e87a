"""Certified lower bounds for the critical probability of oriented bond percolation.

The window chain of order ``i`` is built exactly as a matrix of integer
polynomials in ``q = 1 - p``; its stationary mean drift is evaluated in
floating point with rigorous error bounds, and the root of the drift is
bracketed with certified signs.  A Monte Carlo edge simulator covers orders
far beyond the exact pipeline.
"""

from ._backend import COMPILED
from .bond_field import BondCoord, Direction, UniformBondField
from .certified import CertifiedSign, ErrBounded, certified_sign, mean_drift_value, stationary_solve
from .imc import build_chain, drift_vector, one_step_law, transition_matrix
from .mc_edge import PackedWindow, estimate_pc_mc, fast_step, plateau_scan, run_window_trajectory
from .poly import IntPoly, RationalFn
from .sdtcp import InfectionConfig, WindowState, imc_readout, run_coupled, run_trajectory, step
from .solver import BoundTable, Enclosure, bracket_root, convergence_table

__version__ = "0.1.0"

__all__ = [
    "COMPILED", "BondCoord", "Direction", "UniformBondField", "CertifiedSign", "ErrBounded",
    "certified_sign", "mean_drift_value", "stationary_solve", "build_chain", "drift_vector",
    "one_step_law", "transition_matrix", "PackedWindow", "estimate_pc_mc", "fast_step",
    "plateau_scan", "run_window_trajectory", "IntPoly", "RationalFn", "InfectionConfig",
    "WindowState", "imc_readout", "run_coupled", "run_trajectory", "step", "BoundTable",
    "Enclosure", "bracket_root", "convergence_table",
]
