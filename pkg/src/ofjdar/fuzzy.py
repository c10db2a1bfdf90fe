"""Fuzzy class memberships for continuous labels.

Labels (already scaled to ``[0, 1]``) are smoothed with a Gaussian KDE, the
CDF is integrated numerically and inverted at a few quantiles, and one
triangular fuzzy set is centred on each resulting breakpoint. A label then
belongs to neighbouring classes with degrees that sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, DegenerateClassError, DegenerateInputError

__all__ = [
    "DEFAULT_QUANTILES",
    "FuzzyPartition",
    "MembershipMatrix",
    "silverman_bandwidth",
    "kde_cdf",
    "kde_percentiles",
    "build_fuzzy_partition",
    "membership",
    "normalize_memberships",
    "fuzzy_memberships",
]

DEFAULT_QUANTILES = (0.05, 0.50, 0.95)


@dataclass(frozen=True)
class FuzzyPartition:
    """Triangular fuzzy sets peaked at strictly ascending breakpoints.

    The first set keeps membership 1 left of its peak and the last set keeps
    membership 1 right of its peak, so every label gets some class.
    """

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        if bp.size == 0:
            raise ConfigurationError("a partition needs at least one breakpoint")
        if not np.all(np.isfinite(bp)):
            raise ConfigurationError("breakpoints must be finite")
        if np.any(np.diff(bp) <= 0):
            raise ConfigurationError(f"breakpoints must be strictly ascending, got {bp}")
        bp = bp.copy()
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def n_sets(self) -> int:
        return self.breakpoints.size

    def evaluate(self, labels) -> np.ndarray:
        """Membership degrees, shape ``(n, n_sets)``."""
        y = np.asarray(labels, dtype=float).reshape(-1)
        bp = self.breakpoints
        C = bp.size
        mu = np.zeros((y.size, C))
        if C == 1:
            mu[:, 0] = 1.0
            return mu
        for c in range(C):
            peak = bp[c]
            if c == 0:
                left = np.where(y <= peak, 1.0, 0.0)
            else:
                lo = bp[c - 1]
                left = np.clip((y - lo) / (peak - lo), 0.0, 1.0) * (y <= peak)
            if c == C - 1:
                right = np.where(y > peak, 1.0, 0.0)
            else:
                hi = bp[c + 1]
                right = np.clip((hi - y) / (hi - peak), 0.0, 1.0) * (y > peak)
            mu[:, c] = left + right
        return mu


@dataclass(frozen=True)
class MembershipMatrix:
    mu: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float, ndmin=2)
        if mu.ndim != 2:
            raise ConfigurationError("membership matrix must be 2-D")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def n_samples(self) -> int:
        return self.mu.shape[0]

    @property
    def n_classes(self) -> int:
        return self.mu.shape[1]

    def supported_classes(self) -> np.ndarray:
        """Indices of classes with positive total membership."""
        return np.flatnonzero(self.mu.sum(axis=0) > 0)


def silverman_bandwidth(labels) -> float:
    y = np.asarray(labels, dtype=float)
    return 1.06 * y.std(ddof=1) * y.size ** (-0.2)


def kde_cdf(labels, bandwidth=None, grid_size: int = 2048):
    """Gaussian KDE and its trapezoidal CDF on a uniform grid.

    Returns ``(grid, density, cdf)``; the grid spans three bandwidths beyond
    the data on both sides and ``cdf[-1] == 1``.
    """
    y = np.asarray(labels, dtype=float).reshape(-1)
    if y.size < 2:
        raise DegenerateInputError("KDE needs at least two labels")
    if np.ptp(y) <= 0:
        raise DegenerateInputError("KDE of constant labels is degenerate")
    h = silverman_bandwidth(y) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ConfigurationError(f"bandwidth must be positive, got {h}")
    grid = np.linspace(y.min() - 3 * h, y.max() + 3 * h, grid_size)
    u = (grid[:, None] - y[None, :]) / h
    density = np.exp(-0.5 * u * u).sum(axis=1) / (y.size * h * np.sqrt(2 * np.pi))
    steps = 0.5 * (density[1:] + density[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(steps)])
    cdf /= cdf[-1]
    return grid, density, cdf


def kde_percentiles(labels, quantiles: Sequence[float] = DEFAULT_QUANTILES,
                    bandwidth=None, grid_size: int = 2048) -> np.ndarray:
    """Quantiles of the KDE-smoothed label distribution."""
    q = np.asarray(quantiles, dtype=float).reshape(-1)
    if q.size == 0 or np.any((q <= 0) | (q >= 1)) or np.any(np.diff(q) <= 0):
        raise ConfigurationError(f"quantiles must be strictly ascending in (0, 1), got {q}")
    grid, _, cdf = kde_cdf(labels, bandwidth, grid_size)
    # drop flat stretches so the inverse is single valued
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return np.interp(q, cdf[keep], grid[keep])


def build_fuzzy_partition(breakpoints) -> FuzzyPartition:
    return FuzzyPartition(np.asarray(breakpoints, dtype=float))


def membership(partition: FuzzyPartition, labels) -> MembershipMatrix:
    return MembershipMatrix(partition.evaluate(labels), normalized=False)


def normalize_memberships(mu: MembershipMatrix) -> MembershipMatrix:
    """Scale each class column to unit sum over the samples of one domain."""
    values = mu.mu if isinstance(mu, MembershipMatrix) else np.asarray(mu, dtype=float)
    totals = values.sum(axis=0)
    empty = np.flatnonzero(totals <= 0)
    if empty.size:
        raise DegenerateClassError(
            f"fuzzy classes {empty.tolist()} have no membership in this domain", empty
        )
    return MembershipMatrix(values / totals, normalized=True)


def fuzzy_memberships(labels, quantiles: Sequence[float] = DEFAULT_QUANTILES,
                      partition: FuzzyPartition = None) -> MembershipMatrix:
    """Labels in ``[0, 1]`` to raw memberships, fitting a partition when none is given."""
    if partition is None:
        partition = build_fuzzy_partition(kde_percentiles(labels, quantiles))
    return membership(partition, labels)
