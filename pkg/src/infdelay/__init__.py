"""Pseudospectral reduction of infinite-delay equations on Laguerre nodes."""

from .laguerre import (NodeFamily, QuadratureRule, gauss_laguerre_rule,
                       laguerre_deriv_eval, laguerre_eval, radau_laguerre_rule)
from .mesh import (ExtendedMesh, HalfLineQuadrature, ScaledMesh,
                   barycentric_weights, build_scaled_mesh, diff_matrix,
                   extend_mesh, half_line_quadrature, interp_eval)
from .kernels import (CustomKernel, ExponentialKernel, GammaKernel,
                      ShiftedKernel, SinModulatedKernel, kernel_eval,
                      kernel_laplace)
from .operators import (DiscretizedLinearOperator, DiscretizedODE,
                        LinearDDEProblem, LinearREProblem,
                        assemble_dde_linear, assemble_nonlinear_rhs,
                        assemble_re_linear, build_discretization)
from .spectra import (BENCHMARK_CASES, ConvergenceRecord, RootMatch, Spectrum,
                      char_root_solve, convergence_study, discrete_char_fn,
                      eig_dense, exact_roots_exponential, match_roots,
                      theoretical_bound)
from .models import (Branch, EquilibriumResult, ModelSpec, continue_equilibrium,
                     equilibrium_newton, model_beretta_breda, model_blowflies,
                     stability_at)

__version__ = "0.1.0"
