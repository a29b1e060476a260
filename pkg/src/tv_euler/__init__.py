"""Randomised-time Euler-Maruyama scheme for SDEs with discontinuous drift.

The package samples the scheme, estimates the law of its endpoint with
kernel density estimators, and measures total-variation convergence against
exact densities, a mild-equation solver, or the scheme at half the step.
"""

from .convergence import (RateFit, discrete_gronwall, fit_order, theoretical_ratio,
                          verify_sum_bound)
from .drift import (DriftSpec, LampertiTransform, SdeProblem, evaluate_drift,
                    fat_cantor_drift, lamperti_drift, reduce_constant_noise)
from .errors import (CapacityError, ConfigError, ConvergenceError, DomainError,
                     TvEulerError, VerificationError)
from .euler import (EndpointSample, SamplerConfig, coupled_endpoints, sample_endpoints, step)
from .exact import (ClosedFormDensity, bang_bang_density, bang_bang_gaussian_start,
                    density_to_grid, verify_chapman_kolmogorov)
from .experiment import (ErrorReport, ExperimentConfig, emit_outputs, load_config,
                         run_experiment)
from .grid import DensityGrid
from .kde import (EPANECHNIKOV, GAUSSIAN, BandwidthRule, KdeModel, KernelSpec,
                  mise_bandwidth, silverman_bandwidth, silverman_per_mode)
from .metrics import (TvEstimate, aggregate_runs, trapezoid_l1_self,
                      trapezoid_l1_vs_exact)
from .mild import (PicardConfig, contraction_diagnostics, gaussian_convolve,
                   heat_kernel_l1_norms, picard_solve)

__version__ = "0.1.0"
