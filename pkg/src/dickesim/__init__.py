"""Collective spontaneous emission toolkit.

Build N-atom ensembles, construct superradiant / subradiant collective
states, and compute their decay three independent ways: the Markov-limit
pair kernel, a mode-resolved Weisskopf-Wigner integration, and the exact
small-sample angular-momentum algebra.  Optical preparation and
switching protocols plus a scenario CLI sit on top.
"""

from .ensemble import (AtomEnsemble, BinPartition, from_positions, halves,
                       line, make_ensemble, point_cluster, slab, thirds)
from .errors import (AcceptanceViolation, CapacityError, ConfigurationError,
                     DegenerateInputError, DickesimError, FitFailureError,
                     IntegrationError, InvalidParameterError,
                     ScenarioParseError, ScenarioValidationError)
from .kernel import (DecayKernel, DecayTrajectory, build_kernel,
                     closed_form_clamped, evolve_amplitudes, rate_minus_closed_form,
                     rate_of, rate_plus_closed_form, rate_three_bin_closed_form)
from .states import (ExcitationState, apply_bin_phase, basis_state,
                     bin_weighted_state, minus_state, plus_state,
                     structure_factor, three_bin_state)
from .wigner_weisskopf import (ModeGrid, RateFit, WWState, WWTrajectory,
                               extract_rate, integrate_ww, make_mode_grid)

__version__ = "0.1.0"
