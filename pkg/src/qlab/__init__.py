"""Numerical laboratory for Delaunay-type constant Q-curvature metrics."""
from .dimension import DimensionParams, make_params, sphere_eigenvalue
from .errors import (BlowUpError, ConvergenceError, DomainError, IntegrationError,
                     QLabError, StepSizeUnderflowError)
from .cylinder_ode import (CylState, DelaunaySolution, ToleranceConfig, Trajectory,
                           free_run_defect, hamiltonian, hamiltonian_of_necksize,
                           integrate_orbit, necksize_of_hamiltonian, ode_rhs,
                           periodicity_defect, propagate_orbit, shoot_delaunay,
                           sphere_limit)
from .linearization import (FloquetData, IndicialSet, JacobiField, ModeOperator,
                            cylinder_indicial_closed_form, floquet, indicial_roots,
                            jordan_check, mode_operator, monodromy,
                            verify_mode_nondegeneracy, w0_cylinder, w0_minus, w0_plus)
from .symplectic import (AEpsilon, DeficiencyBasis, OmegaMatrix, a_epsilon,
                         boundary_pairing, dH_deps, deficiency_basis, isotropic_check,
                         omega_matrix)
from .conformal import (AsymptoteData, QCurvature, RadialProfile, WeightedNorm,
                        delaunay_euclidean_profile, emden_fowler_forward,
                        emden_fowler_inverse, fit_asymptote, q_curvature_radial,
                        sphere_profile, weighted_norm)

__version__ = "0.1.0"
