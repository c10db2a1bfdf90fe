"""Fuzzy-set joint distribution adaptation for online regression.

Modules: ``dataset`` (synthetic domains, noise, online schedule), ``fuzzy``
(label memberships), ``mmd`` (discrepancy matrices), ``adapt`` (kernel
adaptation and the joint/marginal methods), ``regress`` (Gaussian process
regressor) and ``bench`` (online protocol, experiment sweeps, CSV reports).
"""

from .adapt import AdaptParams, KernelSpec, ofjdar, optimize_gamma, otcar, solve_adaptation
from .bench import ExperimentConfig, MethodId, rmse, run_matrix, run_online_task
from .dataset import (
    RegressionDomain,
    SyntheticPanelConfig,
    add_noise,
    generate_synthetic_domain,
    load_domain,
    online_split,
    save_domain,
)
from .exceptions import OfjdarError
from .regress import GaussianProcessRegressor

__version__ = "0.1.0"

__all__ = [
    "AdaptParams",
    "KernelSpec",
    "ofjdar",
    "otcar",
    "optimize_gamma",
    "solve_adaptation",
    "ExperimentConfig",
    "MethodId",
    "rmse",
    "run_matrix",
    "run_online_task",
    "RegressionDomain",
    "SyntheticPanelConfig",
    "add_noise",
    "generate_synthetic_domain",
    "load_domain",
    "online_split",
    "save_domain",
    "OfjdarError",
    "GaussianProcessRegressor",
]
