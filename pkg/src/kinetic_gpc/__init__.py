"""Chaos-Galerkin solver for a linear kinetic equation with random scattering.

Velocity is discretized by Gauss-Hermite quadrature against the Maxwellian,
the random variable by an orthonormal polynomial expansion, and space/time
by an asymptotic-preserving micro-macro scheme whose cost and accuracy are
uniform in the scale parameter.  A harness verifies the analytic structure
as executable properties: collision coercivity, mass conservation, energy
dissipation, the linear-in-scale local-equilibrium defect, uniform spectral
convergence in the chaos resolution, and the diffusion limit.
"""

from .collision import (CollisionOperatorColloc, CollisionOperatorSG, KernelSpec,
                        affine_z_kernel, anisotropic_gaussian_kernel,
                        collision_matrix_colloc, collision_tensor_sg,
                        constant_kernel, fixed_z_operator, lambda_eval,
                        nonlinear_z_kernel, sigma_eval, validate_kernel)
from .diffusion import (assemble_exact_D, assemble_frequency_D,
                        assemble_frequency_D_factorized, drift_diffusion_solve)
from .gpc_basis import (GpcBasis, QuadratureRule, build_basis, eval_basis,
                        gauss_rule, gram_matrix, multiply_by_z, project,
                        reconstruct, z_derivative_matrix)
from .metrics import (CollocationEnsemble, SgError, defect_norm, fit_loglog_slope,
                      gamma_k_norm, gamma_norm, gamma_norm_density,
                      gamma_norm_state, sg_error)
from .solver import (CFLError, InitParams, MicroMacroStepper, NumericalError,
                     ResolvedState, RunResult, Scenario, SpatialGrid, StateSG,
                     build_ensemble, build_operators, build_spatial_grid,
                     default_scenario, initial_state, micromacro_dt,
                     micromacro_step, resolved_dt, resolved_step_colloc,
                     run_scenario)
from .velocity import (VelocityGrid, build_velocity_grid, density,
                       gaussian_moment, moment, pi_project)

__version__ = "0.1.0"
