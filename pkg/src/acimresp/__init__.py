"""Invariant densities and linear response of analytic full-branch Markov
interval maps by Chebyshev collocation of transfer operators."""

from .conjugacy import (BranchSystem, Conjugacy, build_branch_system,
                        check_assumption_a, psi_prime_safe)
from .errors import *  # noqa: F401,F403
from .maps import (AnalyticMap, ObservablePoly, PerturbationField,
                   branch_inverse, chebyshev_markov_map, critical_points,
                   perturbed_map, power_to_cheb, validate_markov)
from .oracles import (ResponseEstimate, chebyshev_closed_form_checks,
                      direct_kappa, finite_difference_response)
from .spectral import ChebGrid, GridFunction
from .susceptibility import (MeromorphicFn, PadeApproximant, Response,
                             build_phi_minus, build_phi_plus, build_Y,
                             decompose_Y, pade_poles, series_H0)
from .transfer import (TransferMatrices, acim_density, assemble,
                       lemma_checks, spectrum_and_density)

__version__ = "0.1.0"
