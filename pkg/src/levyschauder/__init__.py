"""Numerical verification toolkit for regularity of Lévy generators.

The package computes transition densities, resolvents, generators and
Hölder-Zygmund norms for Lévy processes on periodic lattices, and uses them
to check gradient estimates, resolvent smoothing, Schauder estimates, the
carré du champ product rule and two counterexamples for the planar Cauchy
process.
"""

from . import cauchy_lab, corpus, generator_ops, holder, levy_models, resolvent_engine, spectral_grid
from .errors import (AliasingError, BudgetExceeded, ConfigError, DegenerateFit, IdentityViolation,
                     LevySchauderError, MissingDerivative, OutOfDomain, QuadratureDivergence)
from .reports import ScalingFit, VerificationReport
from .levy_models import *  # noqa: F401,F403
from .spectral_grid import *  # noqa: F401,F403
from .holder import *  # noqa: F401,F403
from .resolvent_engine import *  # noqa: F401,F403
from .generator_ops import *  # noqa: F401,F403
from .cauchy_lab import *  # noqa: F401,F403
from .corpus import *  # noqa: F401,F403

__version__ = "0.1.0"
