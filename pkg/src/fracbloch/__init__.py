"""Numerical toolkit for radial-weight fractional derivatives and Bloch-type spaces."""

from . import _accel
from .bands import RatioBand
from .classes import classify
from .config import ExperimentConfig, parse_weight_spec
from .constructions import counterexample_function, counterexample_report, dyadic_radii, lacunary_sum
from .errors import (ConfigurationError, DomainError, FracBlochError, InvalidWeightError,
                     NumericError, SpecParseError, TruncationError)
from .norms import bloch_norm, bmu_norm, integral_mean
from .series import TaylorPoly, classical_frac_deriv, frac_deriv
from .weights import builtin_weight, log_moments, moment, moments, tail

__version__ = "0.1.0"
