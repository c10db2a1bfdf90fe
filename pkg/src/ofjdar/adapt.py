"""Kernel domain adaptation for regression.

Source and target samples are embedded with ``A^T K`` where ``A`` solves the
generalized eigenproblem

    (K M K + lam I) a = phi K H K a

for the ``k`` smallest ``phi``. ``M`` is the marginal MMD matrix plus, for the
fuzzy joint variant, one conditional MMD matrix per fuzzy label class. The
joint variant alternates between solving for ``A``, refitting a regressor in
the embedded space and refreshing the pseudo labels of unlabeled target
samples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import eigh
from scipy.spatial.distance import cdist

from .dataset import LabelScaler
from .exceptions import (
    ConfigurationError,
    DegenerateInputError,
    SolverError,
)
from .fuzzy import (
    DEFAULT_QUANTILES,
    build_fuzzy_partition,
    kde_percentiles,
    membership,
    normalize_memberships,
)
from .mmd import MmdMatrices, conditional_mmd_matrices, marginal_mmd_matrix
from .regress import GaussianProcessRegressor

__all__ = [
    "KernelSpec",
    "AdaptParams",
    "AdaptationModel",
    "AdaptationResult",
    "rbf_kernel",
    "centering_matrix",
    "standardize",
    "median_sq_distance",
    "solve_adaptation",
    "embed",
    "fuzzy_conditional_matrices",
    "ofjdar",
    "otcar",
    "default_gamma_grid",
    "gamma_scores",
    "optimize_gamma",
]

log = logging.getLogger(__name__)

GAMMA_EXPONENTS = (-10, -8, -6, -4, -2, 0, 2, 4)


@dataclass(frozen=True)
class KernelSpec:
    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigurationError(f"gamma must be finite and positive, got {self.gamma}")


@dataclass(frozen=True)
class AdaptParams:
    """Adaptation settings.

    ``partition`` chooses where the fuzzy sets come from: ``"pooled"`` fits one
    partition on the labels of both domains (classes mean the same crack
    sizes in each domain), ``"per_domain"`` fits one per domain.
    ``eig_rtol`` discards directions whose variance-to-penalty ratio is below
    ``eig_rtol`` times the largest one; the unit-variance constraint cannot be
    met accurately along them.
    ``embedding`` sets the coordinates handed to the regressor: ``"unit"``
    rescales each component to a unit-norm coefficient vector, ``"constrained"``
    uses ``A^T K`` with the unit-variance scaling of ``A`` as is. With ``k``
    covering every usable direction the constrained coordinates are a
    rotation of whitened kernel PCA whatever ``M`` is, so an isotropic
    regressor cannot see the adaptation.
    """

    lam: float = 1.0
    k: int = 100
    c: int = 3
    max_iters: int = 10
    tol: float = 1e-3
    quantiles: Optional[Sequence[float]] = None
    partition: str = "pooled"
    standardize: bool = True
    eig_rtol: float = 1e-8
    embedding: str = "unit"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.c < 0:
            raise ConfigurationError("c must be >= 0")
        if self.lam < 0:
            raise ConfigurationError("lam must be >= 0")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if self.partition not in ("pooled", "per_domain"):
            raise ConfigurationError(f"unknown partition scope {self.partition!r}")
        if self.embedding not in ("unit", "constrained"):
            raise ConfigurationError(f"unknown embedding scaling {self.embedding!r}")
        if self.quantiles is not None and len(self.quantiles) != self.c:
            raise ConfigurationError("need one quantile per fuzzy class")

    def class_quantiles(self):
        if self.quantiles is not None:
            return tuple(self.quantiles)
        if self.c == 3:
            return DEFAULT_QUANTILES
        if self.c == 1:
            return (0.5,)
        return tuple(np.linspace(0.05, 0.95, self.c))


@dataclass(frozen=True)
class AdaptationModel:
    """Fitted adaptation: ``embed(rows) = A^T k(training_inputs, rows)``."""

    a: np.ndarray
    eigenvalues: np.ndarray
    kernel: Optional[KernelSpec] = None
    training_inputs: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    iterations: int = 1

    @property
    def k(self) -> int:
        return self.a.shape[1]

    def component_scale(self, embedding: str = "unit") -> np.ndarray:
        """Per-component factor applied to ``A^T K`` before regression."""
        if embedding == "constrained":
            return np.ones(self.k)
        return 1.0 / np.linalg.norm(self.a, axis=0)

    def normalize_rows(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if self.center is None:
            return rows
        return (rows - self.center) / self.scale


class AdaptationResult(NamedTuple):
    model: AdaptationModel
    predictions: np.ndarray
    regressor: object


def rbf_kernel(rows_a, rows_b, kernel: KernelSpec) -> np.ndarray:
    rows_a = np.atleast_2d(np.asarray(rows_a, dtype=float))
    rows_b = np.atleast_2d(np.asarray(rows_b, dtype=float))
    if rows_a.shape[1] != rows_b.shape[1]:
        raise ConfigurationError(
            f"feature dimensions differ: {rows_a.shape[1]} vs {rows_b.shape[1]}"
        )
    d2 = np.maximum(cdist(rows_a, rows_b, "sqeuclidean"), 0.0)
    return np.exp(-kernel.gamma * d2)


def centering_matrix(n: int) -> np.ndarray:
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def standardize(rows):
    """Per-feature z-score; returns ``(normalized, center, scale)``."""
    rows = np.asarray(rows, dtype=float)
    center = rows.mean(axis=0)
    scale = rows.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (rows - center) / scale, center, scale


def median_sq_distance(rows) -> float:
    d2 = cdist(rows, rows, "sqeuclidean")
    d2 = d2[np.triu_indices_from(d2, 1)]
    d2 = d2[d2 > 0]
    return float(np.median(d2)) if d2.size else 1.0


def solve_adaptation(kernel_matrix, mmd, params: AdaptParams) -> AdaptationModel:
    """Adaptation matrix from the ``k`` smallest generalized eigenpairs.

    Solved as the reciprocal pencil ``K H K v = w (K M K + lam I) v`` whose
    right-hand side is positive definite for ``lam > 0``; ``phi = 1 / w``.
    Columns are scaled so that ``A^T K H K A = I`` and signed so that each
    column's largest-magnitude entry is positive.
    """
    K = np.asarray(kernel_matrix, dtype=float)
    N = K.shape[0]
    if K.ndim != 2 or K.shape[1] != N:
        raise ConfigurationError(f"kernel matrix must be square, got {K.shape}")
    if params.k > N:
        raise ConfigurationError(f"k = {params.k} exceeds the sample count {N}")
    M = mmd.total() if isinstance(mmd, MmdMatrices) else np.asarray(mmd, dtype=float)
    if M.shape != (N, N):
        raise ConfigurationError(f"MMD matrix shape {M.shape} does not match kernel {K.shape}")

    K = 0.5 * (K + K.T)
    HK = K - K.mean(axis=0)
    variance = HK.T @ HK
    penalty = K @ M @ K
    penalty = 0.5 * (penalty + penalty.T) + params.lam * np.eye(N)

    w = V = None
    for jitter in (0.0, 1e-9, 1e-6):
        try:
            shift = jitter * max(1.0, np.trace(penalty) / N)
            w, V = eigh(variance, penalty + shift * np.eye(N), check_finite=False)
            break
        except np.linalg.LinAlgError:
            continue
    if w is None:
        raise SolverError("penalty matrix is not positive definite; use lam > 0")

    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    if not w[0] > 0:
        raise SolverError("kernel matrix has no variance after centering")
    usable = int(np.sum(w > params.eig_rtol * w[0]))
    k = min(params.k, usable)
    if k < params.k:
        log.debug("keeping %d of %d requested components", k, params.k)
    w, V = w[:k], V[:, :k]
    A = V / np.sqrt(w)
    pivot = np.argmax(np.abs(A), axis=0)
    A = A * np.sign(A[pivot, np.arange(k)])
    return AdaptationModel(A, 1.0 / w)


def embed(model: AdaptationModel, rows) -> np.ndarray:
    """Embedded coordinates ``(k, n_new)`` of new feature rows."""
    if model.training_inputs is None or model.kernel is None:
        raise ConfigurationError("model carries no training inputs to embed against")
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != model.training_inputs.shape[1]:
        raise ConfigurationError(
            f"rows have {rows.shape[1]} features, model expects {model.training_inputs.shape[1]}"
        )
    train = model.normalize_rows(model.training_inputs)
    K_new = rbf_kernel(train, model.normalize_rows(rows), model.kernel)
    return model.a.T @ K_new


def fuzzy_conditional_matrices(labels_s, labels_t, params: AdaptParams):
    """Conditional MMD matrices, one per fuzzy label class.

    Raises :class:`DegenerateClassError` when a class has no membership mass
    in one of the domains.
    """
    labels_s = np.asarray(labels_s, dtype=float)
    labels_t = np.asarray(labels_t, dtype=float)
    q = params.class_quantiles()
    if params.partition == "pooled":
        pooled = np.concatenate([labels_s, labels_t])
        scaler = LabelScaler.fit(pooled)
        partition = build_fuzzy_partition(kde_percentiles(scaler.scale(pooled), q))
        mu_s = membership(partition, scaler.scale(labels_s))
        mu_t = membership(partition, scaler.scale(labels_t))
    else:
        parts = []
        for labels in (labels_s, labels_t):
            scaler = LabelScaler.fit(labels)
            scaled = scaler.scale(labels)
            parts.append(membership(build_fuzzy_partition(kde_percentiles(scaled, q)), scaled))
        mu_s, mu_t = parts
    return conditional_mmd_matrices(normalize_memberships(mu_s), normalize_memberships(mu_t))


def _stack(x_s, y_s, x_tl, y_tl, x_tu):
    x_s = np.atleast_2d(np.asarray(x_s, dtype=float))
    x_tl = np.asarray(x_tl, dtype=float).reshape(-1, x_s.shape[1])
    x_tu = np.asarray(x_tu, dtype=float).reshape(-1, x_s.shape[1])
    y_s = np.asarray(y_s, dtype=float).reshape(-1)
    y_tl = np.asarray(y_tl, dtype=float).reshape(-1)
    if len(x_s) < 1 or len(x_tl) < 1 or len(x_tu) < 1:
        raise ConfigurationError("need at least one source, labeled and unlabeled target sample")
    if len(y_s) != len(x_s) or len(y_tl) != len(x_tl):
        raise ConfigurationError("labels do not match feature rows")
    if not (np.all(np.isfinite(y_s)) and np.all(np.isfinite(y_tl))):
        raise ConfigurationError("labels must be finite")
    return x_s, y_s, x_tl, y_tl, x_tu


def _adapt(x_s, y_s, x_tl, y_tl, x_tu, params, kernel, regressor_factory, joint, max_iters):
    x_s, y_s, x_tl, y_tl, x_tu = _stack(x_s, y_s, x_tl, y_tl, x_tu)
    params = params or AdaptParams()
    factory = regressor_factory or GaussianProcessRegressor
    n_s, n_tl, n_tu = len(x_s), len(x_tl), len(x_tu)
    n_l = n_s + n_tl

    X = np.vstack([x_s, x_tl, x_tu])
    if params.standardize:
        Xn, center, scale = standardize(X)
    else:
        Xn, center, scale = X, None, None
    if kernel is None:
        kernel = KernelSpec(1.0 / median_sq_distance(Xn))
    K = rbf_kernel(Xn, Xn, kernel)
    y_l = np.concatenate([y_s, y_tl])
    span = float(np.ptp(y_l)) or 1.0

    m0 = marginal_mmd_matrix(n_s, n_tl + n_tu)
    y_hat = None
    if joint:
        # pseudo labels from the unadapted inputs
        y_hat = factory().fit(Xn[:n_l], y_l).predict(Xn[n_l:])

    iterations = 0
    for iterations in range(1, max_iters + 1):
        m_c = []
        if joint:
            try:
                m_c = fuzzy_conditional_matrices(y_s, np.concatenate([y_tl, y_hat]), params)
            except DegenerateInputError as exc:
                log.info("round %d: fuzzy classes unavailable (%s); marginal only", iterations, exc)
        model = solve_adaptation(K, MmdMatrices(m0, m_c, n_s, n_tl + n_tu), params)
        Z = (model.a.T @ K) * model.component_scale(params.embedding)[:, None]
        regressor = factory().fit(Z[:, :n_l].T, y_l)
        y_new = regressor.predict(Z[:, n_l:].T)
        change = np.inf if y_hat is None else np.linalg.norm(y_new - y_hat) / span
        y_hat = y_new
        if change < params.tol:
            break

    model = replace(model, kernel=kernel, training_inputs=X, center=center, scale=scale,
                    iterations=iterations)
    return AdaptationResult(model, y_hat, regressor)


def ofjdar(x_s, y_s, x_tl, y_tl, x_tu, params: Optional[AdaptParams] = None,
           kernel: Optional[KernelSpec] = None,
           regressor_factory: Optional[Callable] = None) -> AdaptationResult:
    """Fuzzy joint distribution adaptation with pseudo-label refinement.

    Parameters
    ----------
    x_s, y_s : source features ``(n_s, m)`` and labels
    x_tl, y_tl : revealed target features and labels
    x_tu : target features awaiting prediction
    params : AdaptParams, optional
    kernel : KernelSpec, optional
        Defaults to ``gamma = 1 / median squared distance`` of the inputs.
    regressor_factory : callable, optional
        Zero-argument callable returning an object with ``fit``/``predict``;
        defaults to :class:`GaussianProcessRegressor`.

    Returns
    -------
    AdaptationResult
        ``(model, predictions for x_tu, fitted regressor)``.
    """
    params = params or AdaptParams()
    return _adapt(x_s, y_s, x_tl, y_tl, x_tu, params, kernel, regressor_factory,
                  joint=params.c > 0, max_iters=params.max_iters if params.c > 0 else 1)


def otcar(x_s, y_s, x_tl, y_tl, x_tu, params: Optional[AdaptParams] = None,
          kernel: Optional[KernelSpec] = None,
          regressor_factory: Optional[Callable] = None) -> AdaptationResult:
    """Marginal-only adaptation, solved once, then a regressor in the embedded space."""
    return _adapt(x_s, y_s, x_tl, y_tl, x_tu, params, kernel, regressor_factory,
                  joint=False, max_iters=1)


def default_gamma_grid(rows, exponents=GAMMA_EXPONENTS):
    """Powers of two divided by the median squared distance of ``rows``."""
    return [2.0 ** e / median_sq_distance(rows) for e in exponents]


def gamma_scores(x_s, y_s, x_tl, y_tl, x_tu, gamma_grid=None, holdout=None,
                 params: Optional[AdaptParams] = None, method: Callable = ofjdar,
                 regressor_factory: Optional[Callable] = None):
    """Holdout RMSE of ``method`` for each ``gamma``.

    The newest ``holdout`` labeled target samples are moved into the
    unlabeled pool and predicted together with ``x_tu``.
    Returns ``(gammas ascending, rmse per gamma)``.
    """
    x_s, y_s, x_tl, y_tl, x_tu = _stack(x_s, y_s, x_tl, y_tl, x_tu)
    n_tl = len(x_tl)
    if holdout is None:
        holdout = min(len(x_tu), n_tl - 1)
    if not 1 <= holdout < n_tl:
        raise ConfigurationError(f"holdout must be in [1, n_tl), got {holdout} with n_tl={n_tl}")
    params = params or AdaptParams()
    if gamma_grid is None:
        rows = np.vstack([x_s, x_tl, x_tu])
        gamma_grid = default_gamma_grid(standardize(rows)[0] if params.standardize else rows)
    gammas = sorted(float(g) for g in gamma_grid)
    if not gammas:
        raise ConfigurationError("empty gamma grid")

    keep = n_tl - holdout
    x_aug = np.vstack([x_tl[keep:], x_tu])
    truth = y_tl[keep:]
    scores = []
    for gamma in gammas:
        result = method(x_s, y_s, x_tl[:keep], y_tl[:keep], x_aug, params,
                        KernelSpec(gamma), regressor_factory)
        err = result.predictions[:holdout] - truth
        scores.append(float(np.sqrt(np.mean(err * err))))
    return np.array(gammas), np.array(scores)


def optimize_gamma(x_s, y_s, x_tl, y_tl, x_tu, gamma_grid=None, holdout=None,
                   params: Optional[AdaptParams] = None, method: Callable = ofjdar,
                   regressor_factory: Optional[Callable] = None) -> KernelSpec:
    """Kernel width with the lowest holdout RMSE.

    Scores within ``params.tol`` (in units of the labeled label range) of the
    best count as ties and the smallest such ``gamma`` wins.
    """
    params = params or AdaptParams()
    gammas, scores = gamma_scores(x_s, y_s, x_tl, y_tl, x_tu, gamma_grid, holdout,
                                  params, method, regressor_factory)
    span = float(np.ptp(np.concatenate([np.ravel(y_s), np.ravel(y_tl)]))) or 1.0
    finite = np.isfinite(scores)
    if not finite.any():
        raise SolverError("every gamma produced non-finite predictions")
    best = scores[finite].min()
    winner = np.flatnonzero(finite & (scores <= best + params.tol * span))[0]
    return KernelSpec(float(gammas[winner]))
