"""Bayesian multi-group functional factor analysis.

Curves from several groups are decomposed on a shared B-spline basis into
group mean functions, latent factors common to all groups, and latent
factors specific to each group, with the number of active factors selected
by an increasing-shrinkage prior during Gibbs sampling.
"""

from .basis import BasisSystem, TimeGrid, build_basis_system, build_bspline_basis, build_penalty
from .cusp import CuspHyper, CuspState, count_active
from .gibbs import PosteriorDraws, SamplerConfig, gibbs_sweep, run_chain
from .metrics import geweke_diagnostic, pointwise_mse, rv_coefficient, total_mse
from .model import FunctionalDataset, GroupData, ModelState, log_likelihood, reconstruct_curves
from .postprocess import (
    FactorConfiguration,
    IdentifiedLoadings,
    covariance_derived_loadings,
    covariance_summaries,
    modal_configuration,
    posterior_mean_curves,
    rsp_align,
    varimax,
)
from .simulate import ScenarioConfig, ScenarioTruth, generate_replicate, generate_truth, scenario_preset

__version__ = "0.1.0"

__all__ = [
    "BasisSystem",
    "TimeGrid",
    "build_basis_system",
    "build_bspline_basis",
    "build_penalty",
    "CuspHyper",
    "CuspState",
    "count_active",
    "PosteriorDraws",
    "SamplerConfig",
    "gibbs_sweep",
    "run_chain",
    "geweke_diagnostic",
    "pointwise_mse",
    "rv_coefficient",
    "total_mse",
    "FunctionalDataset",
    "GroupData",
    "ModelState",
    "log_likelihood",
    "reconstruct_curves",
    "FactorConfiguration",
    "IdentifiedLoadings",
    "covariance_derived_loadings",
    "covariance_summaries",
    "modal_configuration",
    "posterior_mean_curves",
    "rsp_align",
    "varimax",
    "ScenarioConfig",
    "ScenarioTruth",
    "generate_replicate",
    "generate_truth",
    "scenario_preset",
    "__version__",
]
