"""steindisc: near-linear-time feature Stein discrepancies.

Importance-sampled Stein discrepancy estimators with inverse-multiquadric
and hyperbolic-secant feature families, a quadratic-time kernel Stein
discrepancy reference, a simulated-null goodness-of-fit test, and a
sample-quality harness for tuning approximate MCMC.
"""

__version__ = "0.1.0"

from ._backends import backend_name
from .models import (ScoreModel, SampleSet, gaussian_model, gmm_posterior_model,
                     rbm_model, sample_alternative, welling_teh_data,
                     model_from_spec, read_sample_csv, write_sample_csv)
from .kernels import (BaseKernel, TiltFunction, imq_kernel, sech_kernel,
                      tilted_kernel, kernel_eval, kernel_grad_x,
                      kernel_dxdy_diag, stein_kernel_eval, ksd_squared,
                      kernel_from_spec)
from .features import FeatureSpec, feature_eval, stein_feature_eval, applied_feature
from .proposals import Proposal, mvt_proposal, sech_proposal, log_density, sample
from .discrepancy import (RPhiSDConfig, DiscrepancyResult, rphisd,
                          phisd_quadrature, phisd_quadrature_per_dim,
                          second_moment_diagnostic, efficiency_experiment)
from .hyper import median_distance, default_config, refit_config
from .goftest import (TestFeatures, GofTestResult, build_test_features,
                      estimate_covariance, simulate_null, run_test,
                      calibrate_nominal_level, power_experiment)
from .sgld import SgldConfig, run_sgld, select_step_size
