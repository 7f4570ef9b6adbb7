"""Unbalanced optimal transport between positive definite matrices.

The geometry combines a matricial Wasserstein term, built from commutators
with a set of Hermitian generators, with a Fisher-Rao (relative) or
Frobenius (absolute) source term. Distances and geodesics come from a convex
dynamic formulation; matrix-valued fields on a 1-D grid and gradient flows
are supported as well.
"""

from .errors import (BasisError, DimensionError, HermitianError, NotPositiveDefiniteError,
                     ParseError, QmotError, TraceMismatchError, UsageError)
from .field import (FieldPath, FieldTransportSolution, MatrixField, field_kkt_residual,
                    field_objective, interpolate_field, solve_field)
from .flow import (FlowConfig, FlowTrajectory, Functional, entropy, flow_rhs, quadratic_energy,
                   run_flow)
from .geometry import (MetricMode, Mode, bures_identity_check, control_cost,
                       fisher_rao_tangent_cost, local_inner, metric_matrix,
                       metric_operator_apply, metric_solve, optimal_controls, tangent_of)
from .hermitian import (EPS_PD, HERM_TOL, as_hermitian, check_pd, dagger, hermitian_part, inner,
                        is_pd, min_eig, random_hermitian, random_pd, sylvester_solve)
from .lindblad import (LindbladBasis, basis_hermitian, check_null_space, div_L, grad_L,
                       laplacian_L, lindblad_diffusion)
from .transport import (DensityPath, SolverConfig, TransportSolution, continuity_residual,
                        distance, interpolate, kkt_residual, objective, solve)

__version__ = "0.1.0"
