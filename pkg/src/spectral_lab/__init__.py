"""Spectral-set constants for unbounded convex domains, checked numerically."""

from .domains import (BoundaryPoint, ConvexDomain, DomainError, HalfPlane, Hyperbola,
                      Parabola, aperture, arg_tail_bound, boundary_point, contains,
                      sector_approx)
from .numrange import (ContainmentCertificate, GenerationError, MatrixOperator,
                       certify_containment, numrange_boundary, random_matrix_in_domain,
                       support_value)
from .rational import (PoleError, RationalFunction, ValidityError, eval_matrix_direct,
                       eval_matrix_spectral, mobius_damp, regularize_matrix, sup_norm)
from .transforms import (BoundaryQuadrature, SingularityError, TransformResult,
                         TruncationError, S_matrix, S_scalar, build_quadrature,
                         cauchy_f_matrix, conj_cauchy_g, g_matrix, mass, mu_kernel,
                         mu_operator, quadrature_for_matrix)
from .verify import (BoundReport, TrialRecord, k_of_alpha, quartic_residual, run_campaign,
                     verify_lemma1, verify_lemma2, verify_main_bound, verify_regularization,
                     verify_schwenninger)

__version__ = "0.1.0"
