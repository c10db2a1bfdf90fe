"""Gaussian process regression with an isotropic RBF kernel.

Adaptation and benchmark code only call ``fit(x, y)`` and ``predict(x)`` on
objects produced by a zero-argument factory, so any estimator with that
surface can stand in for :class:`GaussianProcessRegressor`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist, pdist

from .exceptions import ConfigurationError, FitError

__all__ = [
    "GprHyper",
    "GprModel",
    "JITTER_LADDER",
    "gpr_fit",
    "gpr_predict",
    "log_marginal_likelihood",
    "default_hyper_grid",
    "select_hyperparameters",
    "GaussianProcessRegressor",
]

log = logging.getLogger(__name__)

# diagonal floor relative to the signal variance, tried in order
JITTER_LADDER = (1e-12, 1e-10, 1e-8, 1e-6, 1e-4)


@dataclass(frozen=True)
class GprHyper:
    lengthscale: float
    signal_variance: float
    noise_variance: float = 0.0

    def __post_init__(self):
        values = (self.lengthscale, self.signal_variance, self.noise_variance)
        if not all(np.isfinite(v) for v in values):
            raise ConfigurationError(f"hyperparameters must be finite: {self}")
        if self.lengthscale <= 0 or self.signal_variance <= 0 or self.noise_variance < 0:
            raise ConfigurationError(f"invalid hyperparameters: {self}")


@dataclass(frozen=True)
class GprModel:
    x: np.ndarray
    y_mean: float
    alpha: np.ndarray
    chol: np.ndarray
    hyper: GprHyper
    diagonal: float

    @property
    def n_features(self) -> int:
        return self.x.shape[1]


def _as_rows(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _rbf(a, b, hyper: GprHyper) -> np.ndarray:
    d2 = cdist(a, b, "sqeuclidean")
    return hyper.signal_variance * np.exp(-0.5 * d2 / hyper.lengthscale ** 2)


def _factor(x, hyper: GprHyper):
    K = _rbf(x, x, hyper)
    for rung in JITTER_LADDER:
        diagonal = max(hyper.noise_variance, rung * hyper.signal_variance)
        try:
            L = cholesky(K + diagonal * np.eye(len(x)), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        return L, diagonal
    raise FitError(f"training kernel not positive definite even with jitter ({hyper})")


def gpr_fit(x, y, hyper: GprHyper) -> GprModel:
    x = _as_rows(x)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] < 1 or x.shape[0] != y.size:
        raise ConfigurationError(f"need matching non-empty x, y (got {x.shape}, {y.shape})")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ConfigurationError("GPR inputs must be finite")
    L, diagonal = _factor(x, hyper)
    y_mean = float(y.mean())
    alpha = cho_solve((L, True), y - y_mean, check_finite=False)
    return GprModel(x.copy(), y_mean, alpha, L, hyper, diagonal)


def gpr_predict(model: GprModel, x_star):
    """Posterior mean and (noise-free) variance at ``x_star``."""
    x_star = _as_rows(x_star)
    if x_star.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    if x_star.shape[1] != model.n_features:
        raise ConfigurationError(
            f"query has {x_star.shape[1]} features, model expects {model.n_features}"
        )
    k_star = _rbf(model.x, x_star, model.hyper)
    mean = model.y_mean + k_star.T @ model.alpha
    v = solve_triangular(model.chol, k_star, lower=True, check_finite=False)
    var = model.hyper.signal_variance - np.einsum("ij,ij->j", v, v)
    if np.any(var < -1e-10 * model.hyper.signal_variance):
        log.debug("negative posterior variance %.3g clamped", var.min())
    return mean, np.maximum(var, 0.0)


def log_marginal_likelihood(x, y, hyper: GprHyper) -> float:
    model = gpr_fit(x, y, hyper)
    r = np.asarray(y, dtype=float).reshape(-1) - model.y_mean
    n = r.size
    return float(-0.5 * r @ model.alpha - np.log(np.diag(model.chol)).sum()
                 - 0.5 * n * np.log(2 * np.pi))


def default_hyper_grid(x, y):
    """Lengthscales around the median pairwise distance, noise relative to ``var(y)``."""
    x = _as_rows(x)
    y = np.asarray(y, dtype=float)
    var = float(y.var()) if y.size > 1 else 0.0
    if not var > 0:
        var = 1.0
    dist = pdist(x) if len(x) > 1 else np.zeros(0)
    dist = dist[dist > 0]
    median = float(np.median(dist)) if dist.size else 1.0
    return [
        GprHyper(median * scale, var, noise * var)
        for scale, noise in product((0.25, 0.5, 1.0, 2.0, 4.0), (1e-8, 1e-6, 1e-4, 1e-2))
    ]


def select_hyperparameters(x, y, grid: Optional[Iterable[GprHyper]] = None) -> GprHyper:
    """Grid point of maximal log marginal likelihood (first one on ties)."""
    grid = default_hyper_grid(x, y) if grid is None else list(grid)
    if not grid:
        raise ConfigurationError("empty hyperparameter grid")
    best, best_lml = None, -np.inf
    for hyper in grid:
        try:
            lml = log_marginal_likelihood(x, y, hyper)
        except FitError:
            continue
        if lml > best_lml:
            best, best_lml = hyper, lml
    if best is None:
        raise FitError("no grid point could be factorized")
    return best


class GaussianProcessRegressor:
    """Estimator wrapper; selects hyperparameters on ``fit`` unless ``hyper`` is fixed."""

    def __init__(self, hyper: Optional[GprHyper] = None, grid=None):
        self.hyper = hyper
        self.grid = grid
        self.model_: Optional[GprModel] = None

    def fit(self, x, y):
        hyper = self.hyper
        if hyper is None:
            hyper = select_hyperparameters(x, y, self.grid)
        self.model_ = gpr_fit(x, y, hyper)
        return self

    def predict(self, x, return_var: bool = False):
        if self.model_ is None:
            raise FitError("regressor used before fit")
        mean, var = gpr_predict(self.model_, x)
        return (mean, var) if return_var else mean
