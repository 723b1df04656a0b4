"""2D finite element solver and diagnostics for the damped time-harmonic
Galbrun equation on the square (-4,4)^2."""

from .analysis import (ConvergenceRecord, MachReport, apply_Tn,
                       consistency_error, eoc, helmholtz_project,
                       inf_sup_constant, mach_report, stability_constant,
                       x_norm_error, x_norm_error_exact)
from .assembly import (assemble_convection, assemble_div_coupling,
                       assemble_galbrun, assemble_gram, assemble_mean_vector,
                       assemble_nitsche, assemble_rhs, assemble_taylor_hood)
from .coefficients import (CoefficientSet, check_derivatives,
                           coefficients_from_config, constant_coefficients,
                           gaussian_profile, gaussian_source, mach_number_sq,
                           paper_coefficients)
from .fem import (SCALAR_CONT, SCALAR_DISC, VECTOR_PK, FESpace, QuadRule,
                  ReferenceBasis, build_space, edge_quadrature, eval_fe,
                  lagrange_basis, triangle_quadrature)
from .linalg import (NonConvergenceError, SingularMatrixError, SolveReport,
                     smallest_generalized_eigenvalue, sparse_solve)
from .mesh import (Mesh, ValidationReport, barycentric_refine,
                   generate_square_mesh, locate_point, locate_points,
                   read_mesh, validate, write_mesh)
from .solver import (ManufacturedSolution, ProblemConfig, Solution,
                     manufactured_solution, solve_galbrun)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
