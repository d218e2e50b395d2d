"""Dimension spectra of Birkhoff averages for countable-branch Markov maps.

Finite subsystems of a Markov map are handled with exact transfer matrices;
certified invariant measures on them give dimension lower bounds that are
pushed along a schedule of growing subsystems and shrinking tolerances.
"""

__version__ = "0.1.0"

from .symbolic import Alphabet, InputError, TransitionRule, check_finite_irreducibility, full_shift
from .maps import (EscapeError, MarkovMap, Observable, digit_value, indicator, log_derivative, map_from_name,
                   parse_observable, symbol_value, table_observable)
from .measures import bernoulli_cert, cert_from_json, dimension, integrate, markov_cert, mix, periodic_cert
from .thermo import (ConvergenceError, PotentialSpec, beta_infinity, bowen_root, build_subsystem, equilibrium,
                     pressure)
from .inducing import build_jump_transform, parabolic_bowen_root, project_measure, renyi_jump_scheme
from .spectra import (FrequencyVector, Schedule, SpectrumQuery, besicovitch_eggleston, birkhoff_spectrum,
                      bounded_digit_dimension, check_feasibility, flat_spectrum_witnesses, lyapunov_spectrum,
                      sample_birkhoff)
from .fuchsian import (Mobius, block_decompose, build_bowen_series, build_cusp_induced_map,
                       cusp_frequency_spectrum, cusp_winding_spectrum, default_bowen_series, isometric_circle)

__all__ = [
    "Alphabet", "InputError", "TransitionRule", "check_finite_irreducibility", "full_shift",
    "EscapeError", "MarkovMap", "Observable", "digit_value", "indicator", "log_derivative", "map_from_name",
    "parse_observable", "symbol_value", "table_observable",
    "bernoulli_cert", "cert_from_json", "dimension", "integrate", "markov_cert", "mix", "periodic_cert",
    "ConvergenceError", "PotentialSpec", "beta_infinity", "bowen_root", "build_subsystem", "equilibrium",
    "pressure",
    "build_jump_transform", "parabolic_bowen_root", "project_measure", "renyi_jump_scheme",
    "FrequencyVector", "Schedule", "SpectrumQuery", "besicovitch_eggleston", "birkhoff_spectrum",
    "bounded_digit_dimension", "check_feasibility", "flat_spectrum_witnesses", "lyapunov_spectrum",
    "sample_birkhoff",
    "Mobius", "block_decompose", "build_bowen_series", "build_cusp_induced_map", "cusp_frequency_spectrum",
    "cusp_winding_spectrum", "default_bowen_series", "isometric_circle",
]
