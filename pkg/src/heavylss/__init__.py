"""Linear spectral statistics of heavy-tailed Wigner matrices, 2 < alpha < 4.

Closed-form resolvent-trace covariance, independent quadrature oracles for
it, the spectral kernel in measure and density form, and a Monte Carlo
estimator for the real symmetric ensemble.
"""

from .covariance import (FIGURE_C, ModelParams, cov_closed, cov_diag, cov_real_combination,
                         cov_remark_form, k_alpha)
from .ensemble import (CovarianceEstimate, EnsembleConfig, eigenvalues, empirical_fluct_covariance,
                       resolvent_trace, sample_entry, sample_matrix, tail_constant_c)
from .errors import BranchPointError, DomainError, NonConvergenceError, PoleCollisionError
from .kernel import (KernelEvaluation, TestFunction, figure_grid, kernel_alpha3, kernel_density,
                     lambda_measure_apply, pairing, pairing_via_kernel, plemelj_reconstruct,
                     resolvent_lambda_residual)
from .oracles import (cov_double_laplace_fd, cov_log_fd, cov_r_integral, frac_power_identity_residual,
                      res_integral_identity_residual)
from .quadrature import DEFAULT_QCFG, QuadratureConfig
from .semicircle import m_plus, semicircle_cdf, semicircle_density, stieltjes, stieltjes_derivative

__version__ = "0.1.0"
