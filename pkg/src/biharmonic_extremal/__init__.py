"""Certificates and continuation for the clamped biharmonic problem Δ²u = λ(1+u)^p."""

from .branch import (BranchPoint, BranchResult, StepPolicy, check_upper_bound,
                     continue_branch, lambda1, mu1, solve_bvp)
from .certificate import CertificateReport, NumericalFailure, Verdict
from .params import (DomainError, ProblemParams, compute_alpha, compute_Hn, compute_K0,
                     compute_K1, compute_pc, constants_record)
from .radial import (DiscreteBilaplacian, PowerSum, RadialField, RadialGrid,
                     assemble_discrete_bilaplacian, check_discrete_positivity)
from .stability import StabilitySpec, WeightFunction, certify_stability, sample_hardy_rellich
from .subsolution import SubsolutionSpec, build_omega, certify_subsolution, sup_H

__version__ = "0.1.0"
