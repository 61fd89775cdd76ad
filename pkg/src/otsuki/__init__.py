"""Morse index and nullity of the bipolar tori over closed sphere geodesics.

The computation chain: solve the closed-geodesic family for a rotation
number p/q, sample the geodesic, reduce the stability operator to 2x2
periodic Sturm-Liouville systems per Fourier mode, count negative and
zero eigenvalues by two independent routes (structured finite
differences and boundary forms on a half period), and assemble the index
and nullity with bound checks.
"""

from .errors import (AmbiguousClassificationError, DomainError,
                     EdwardsInapplicableError, NumericalError,
                     RouteDisagreementError, ValidationError)
from .geodesic import (CLIFFORD_HALF_PERIOD, CLIFFORD_ROTATION, GeodesicFamily,
                       RotationNumber, Trajectory, evaluate_extended,
                       half_period, metric_coefficients, rotation_angle,
                       sample_trajectory, solve_parameter)
from .surface import (FramePoint, KernelField, SeparatedCoefficients, frame,
                      immersion, kernel_fields, kernel_residual,
                      export_immersion_csv, separated_coefficients,
                      weingarten_diag)
from .sl import BoundaryCondition, SLSystem, constant_system
from .spectral import (SpectrumSummary, antiperiodic_check_l0, oscillation_index,
                       spectral_index, spectrum_below, spectrum_counts,
                       verify_high_l_positive, zero_count)
from .edwards import (BoundaryFormData, TwistedCount, aggregate_roots,
                      boundary_form, boundary_solutions, det_polynomial,
                      dirichlet_negative_count, gram_matrix, twisted_counts,
                      twisted_form)
from .pipeline import (IndexReport, bounds_check, cache_load, cache_store,
                       compute_index, spectral_index_formula, index_bounds,
                       verify_family)
from .cli import run_cli

__version__ = "0.1.0"
