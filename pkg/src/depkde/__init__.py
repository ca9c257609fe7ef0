"""Dependence-aware bandwidth selection for univariate kernel density estimation.

Standard data-driven bandwidth selectors (biased cross-validation and the
Sheather-Jones plug-ins) assume independent draws.  When the sample is the
output of an MCMC sampler the serial dependence inflates the variance of the
kernel density estimator, and the standard selectors undersmooth.  This
package provides the standard selectors, dependence-corrected versions that
scale the variance term by the integrated autocorrelation time of the kernel,
and a simulation harness for comparing them on known targets.
"""

from .kernel import KernelFunctionals, gauss_deriv, gauss_pdf, kernel_functionals
from .density import EvaluationGrid, build_grid, ise, kde_at, kde_curve, roughness_fhat2
from .dependence import AutocorrSpec, ZetaEstimate, iat, kernel_iat, sample_autocorr, zeta_hat
from .selectors import (
    PilotBandwidths,
    SelectorConfig,
    SelectorResult,
    bcv_objective,
    default_config,
    g_hat,
    mbcv_objective,
    minimize_objective,
    msj_objective,
    normal_scale_bandwidth,
    pilot_bandwidths,
    S_functional,
    select,
    sj_objective,
    solve_the_equation,
    T_functional,
)
from .samplers import (
    MHConfig,
    MHResult,
    TargetDistribution,
    iid_sample,
    lognormal_target,
    mh_sample,
    mixture_target,
    normal_target,
    thin,
    tune_proposal,
)
from .experiment import MethodRecord, StudyConfig, StudyResult, run_replicate, run_study, target_bandwidth

__version__ = "0.1.0"

__all__ = [
    "AutocorrSpec",
    "EvaluationGrid",
    "KernelFunctionals",
    "MHConfig",
    "MHResult",
    "MethodRecord",
    "PilotBandwidths",
    "S_functional",
    "SelectorConfig",
    "SelectorResult",
    "StudyConfig",
    "StudyResult",
    "T_functional",
    "TargetDistribution",
    "ZetaEstimate",
    "bcv_objective",
    "build_grid",
    "default_config",
    "g_hat",
    "gauss_deriv",
    "gauss_pdf",
    "iat",
    "iid_sample",
    "ise",
    "kde_at",
    "kde_curve",
    "kernel_functionals",
    "kernel_iat",
    "lognormal_target",
    "mbcv_objective",
    "mh_sample",
    "minimize_objective",
    "mixture_target",
    "msj_objective",
    "normal_scale_bandwidth",
    "normal_target",
    "pilot_bandwidths",
    "roughness_fhat2",
    "run_replicate",
    "run_study",
    "sample_autocorr",
    "select",
    "sj_objective",
    "solve_the_equation",
    "target_bandwidth",
    "thin",
    "tune_proposal",
    "zeta_hat",
]
