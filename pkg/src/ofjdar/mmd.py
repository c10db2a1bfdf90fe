"""MMD weight matrices and the two ways of evaluating a mean discrepancy.

Every matrix here is an outer product ``e e^T`` of one signed weight vector
``e = [w_s, -w_t]`` whose source and target parts each sum to one. The
quadratic form ``tr(Z M Z^T)`` therefore equals the squared distance between
weighted domain means of the columns of ``Z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .exceptions import ConfigurationError, ContractViolation
from .fuzzy import MembershipMatrix

__all__ = [
    "MmdMatrices",
    "marginal_mmd_matrix",
    "conditional_mmd_matrices",
    "crisp_class_mmd_matrix",
    "mmd_trace_value",
    "direct_mmd_value",
    "build_mmd_matrices",
]

_WEIGHT_TOL = 1e-8


@dataclass(frozen=True)
class MmdMatrices:
    m0: np.ndarray
    m_c: List[np.ndarray] = field(default_factory=list)
    n_s: int = 0
    n_t: int = 0

    @property
    def n(self) -> int:
        return self.n_s + self.n_t

    def total(self) -> np.ndarray:
        """Marginal plus all conditional matrices."""
        out = self.m0.copy()
        for m in self.m_c:
            out += m
        return out

    def all(self) -> List[np.ndarray]:
        return [self.m0, *self.m_c]


def _outer(weights_s, weights_t) -> np.ndarray:
    e = np.concatenate([weights_s, -np.asarray(weights_t)])
    return np.outer(e, e)


def marginal_mmd_matrix(n_s: int, n_t: int) -> np.ndarray:
    if n_s < 1 or n_t < 1:
        raise ConfigurationError(f"need n_s >= 1 and n_t >= 1, got {n_s}, {n_t}")
    return _outer(np.full(n_s, 1.0 / n_s), np.full(n_t, 1.0 / n_t))


def _normalized_values(mu, who: str) -> np.ndarray:
    if isinstance(mu, MembershipMatrix):
        values = mu.mu
    else:
        values = np.asarray(mu, dtype=float)
    if values.ndim != 2:
        raise ContractViolation(f"{who} memberships must be 2-D")
    sums = values.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > _WEIGHT_TOL) or np.any(values < 0):
        raise ContractViolation(
            f"{who} memberships are not normalized per class (column sums {sums})"
        )
    return values


def conditional_mmd_matrices(mu_s_norm, mu_t_norm) -> List[np.ndarray]:
    """One ``N x N`` matrix per fuzzy class from per-domain normalized memberships."""
    mu_s = _normalized_values(mu_s_norm, "source")
    mu_t = _normalized_values(mu_t_norm, "target")
    if mu_s.shape[1] != mu_t.shape[1]:
        raise ContractViolation(
            f"class counts differ: source {mu_s.shape[1]}, target {mu_t.shape[1]}"
        )
    return [_outer(mu_s[:, c], mu_t[:, c]) for c in range(mu_s.shape[1])]


def crisp_class_mmd_matrix(labels_s, labels_t, c) -> np.ndarray:
    """Class-``c`` MMD matrix of hard-labelled JDA, cross terms ``-1/(n_s^c n_t^c)``.

    Reference construction, entry by entry, used to check the fuzzy matrices
    in the one-hot limit.
    """
    labels_s = np.asarray(labels_s)
    labels_t = np.asarray(labels_t)
    n_s, n_t = labels_s.size, labels_t.size
    in_s = labels_s == c
    in_t = labels_t == c
    ns_c, nt_c = int(in_s.sum()), int(in_t.sum())
    if ns_c == 0 or nt_c == 0:
        raise ConfigurationError(f"class {c!r} is empty in one domain")
    member = np.concatenate([in_s, in_t])
    source = np.concatenate([np.ones(n_s, bool), np.zeros(n_t, bool)])
    N = n_s + n_t
    M = np.zeros((N, N))
    for i in range(N):
        if not member[i]:
            continue
        for j in range(N):
            if not member[j]:
                continue
            if source[i] and source[j]:
                M[i, j] = 1.0 / (ns_c * ns_c)
            elif not source[i] and not source[j]:
                M[i, j] = 1.0 / (nt_c * nt_c)
            else:
                M[i, j] = -1.0 / (ns_c * nt_c)
    return M


def mmd_trace_value(Z, M) -> float:
    """``tr(Z M Z^T)`` for embedded data ``Z`` of shape ``(k, N)``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or Z.shape[1] != M.shape[0]:
        raise ConfigurationError(f"shape mismatch: Z {Z.shape}, M {M.shape}")
    return float(np.einsum("ij,jk,ik->", Z, M, Z))


def direct_mmd_value(Z_s, Z_t, weights_s=None, weights_t=None) -> float:
    """Squared distance between weighted means of the columns of ``Z_s`` and ``Z_t``."""
    Z_s = np.atleast_2d(np.asarray(Z_s, dtype=float))
    Z_t = np.atleast_2d(np.asarray(Z_t, dtype=float))
    if Z_s.shape[0] != Z_t.shape[0]:
        raise ConfigurationError(f"embedding dimensions differ: {Z_s.shape[0]} vs {Z_t.shape[0]}")
    n_s, n_t = Z_s.shape[1], Z_t.shape[1]
    w_s = np.full(n_s, 1.0 / n_s) if weights_s is None else np.asarray(weights_s, dtype=float)
    w_t = np.full(n_t, 1.0 / n_t) if weights_t is None else np.asarray(weights_t, dtype=float)
    if w_s.shape != (n_s,) or w_t.shape != (n_t,):
        raise ConfigurationError("weights must match the number of columns")
    if abs(w_s.sum() - 1.0) > _WEIGHT_TOL or abs(w_t.sum() - 1.0) > _WEIGHT_TOL:
        raise ContractViolation(f"weights must sum to 1 (got {w_s.sum()}, {w_t.sum()})")
    diff = Z_s @ w_s - Z_t @ w_t
    return float(diff @ diff)


def build_mmd_matrices(n_s: int, n_t: int, mu_s_norm=None, mu_t_norm=None) -> MmdMatrices:
    m0 = marginal_mmd_matrix(n_s, n_t)
    m_c = [] if mu_s_norm is None else conditional_mmd_matrices(mu_s_norm, mu_t_norm)
    return MmdMatrices(m0, m_c, n_s, n_t)
