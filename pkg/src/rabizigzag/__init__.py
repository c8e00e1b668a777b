"""Quantum Rabi zigzag chain under staggered flux: normal-phase spectra,
superradiant mean-field phases, chiral currents, critical exponents and an
exact-diagonalization cross-check.
"""

from .bogoliubov import Spectrum, diagonalize, ground_energy, zero_point_offset
from .errors import RabiZigzagError
from .meanfield import Displacements, MeanFieldSolution, MinimizeOptions, minimize
from .model import ModelParams, QuadraticForm, analytic_bands, critical_coupling, triple_point
from .observables import CurrentReport, PhaseLabel, classify, currents

__all__ = [
    "ModelParams",
    "QuadraticForm",
    "Spectrum",
    "Displacements",
    "MeanFieldSolution",
    "MinimizeOptions",
    "CurrentReport",
    "PhaseLabel",
    "RabiZigzagError",
    "analytic_bands",
    "critical_coupling",
    "triple_point",
    "diagonalize",
    "ground_energy",
    "zero_point_offset",
    "minimize",
    "currents",
    "classify",
]

__version__ = "0.1.0"
