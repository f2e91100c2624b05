"""Goursat problem for semilinear wave equations with data on light cones.

The solution is computed for the conformally rescaled field on a finite
double-null box; see :mod:`conegoursat.goursat` for the solver and
:mod:`conegoursat.physical` for the map back to Minkowski space.
"""
from .conformal import ConeGeometry, compactify, decompactify, omega
from .config import RunConfig, parse_config
from .goursat import IterationReport, SolverConfig, contraction_estimate, linear_step, \
    picard_solve, transport_bootstrap, uniqueness_probe
from .grid import Field, Grid
from .initialdata import ConeDataMinus, ConeDataPlus, build_approximant, parse_profile, seed_field
from .nonlinearity import MonomialTerm, SourceSpec, cubic_source, dimension_gate, wave_map_source
from .norms import WeightSpec, NormSpec, dyadic_norm, energy_audit, weighted_sobolev_norm
from .physical import decay_report, fit_decay_exponent, reconstruct

__version__ = "0.1.0"
