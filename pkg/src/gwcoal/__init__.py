"""Coalescence times in supercritical Galton-Watson processes with immigration.

Exact distributions from p.g.f. integrals (:mod:`gwcoal.exact`), Monte Carlo
genealogies (:mod:`gwcoal.simulate`) and closed-form or brute-force
references (:mod:`gwcoal.oracles`).
"""

__version__ = "0.1.0"

from .errors import (BadPmf, BasePointMismatch, DomainError, GWCError, MassAtZero, ModelError,  # noqa: E402
                     NotSupercritical, OrderExceeded, QuadratureFailure, ResourceLimit, SampleTooLarge)
from .models import DistSpec, ModelSpec, lnary_model, load_model, moments, pgf_eval, validate  # noqa: E402
from .exact import (CoalescenceDistribution, CoalescenceQuery, falling_factorial_expectation,  # noqa: E402
                    full_distribution, prob_infinity, prob_tail)
from .simulate import (McEstimate, annealed_estimate, limit_law_estimate, martingale_means,  # noqa: E402
                       martingale_sample, martingale_samples, quenched_prob, sample_coalescence, simulate)
