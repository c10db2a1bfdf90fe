"""Domain datasets: synthetic panel responses, normalization, noise, online schedules, CSV I/O.

A domain is a set of strain-like feature vectors, one per damage state, paired
with the crack length (mm) that produced it. Samples are kept in ascending
label order because cracks only grow.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .exceptions import ConfigurationError, DegenerateInputError, ParseError

__all__ = [
    "RegressionDomain",
    "SyntheticPanelConfig",
    "OnlineSchedule",
    "LabelScaler",
    "generate_synthetic_domain",
    "clustered_labels",
    "damage_index",
    "add_noise",
    "scale_labels",
    "online_split",
    "save_domain",
    "load_domain",
]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class RegressionDomain:
    """Feature matrix ``(n, m)`` plus ascending non-negative labels ``(n,)``."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "domain"

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=float).reshape(-1)
        if features.ndim != 2:
            raise ConfigurationError(f"features must be 2-D, got shape {features.shape}")
        if features.shape[0] != labels.shape[0]:
            raise ConfigurationError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels"
            )
        if not np.all(np.isfinite(features)):
            raise ConfigurationError("features contain non-finite values")
        if not np.all(np.isfinite(labels)) or np.any(labels < 0):
            raise ConfigurationError("labels must be finite and non-negative")
        if np.any(np.diff(labels) < 0):
            raise ConfigurationError("labels must be sorted ascending")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "RegressionDomain":
        """Rows selected by ``index`` (a slice, range or sorted index array)."""
        if isinstance(index, range):
            index = slice(index.start, index.stop)
        return RegressionDomain(self.features[index], self.labels[index], self.name)

    def __len__(self) -> int:
        return self.n_samples


@dataclass(frozen=True)
class SyntheticPanelConfig:
    """Parameters of one synthetic rivet-crack domain.

    ``panel_seed`` fixes the response curves shared by every domain of a
    panel; ``domain_seed`` draws the perturbation of one damage location,
    whose size is ``shift_magnitude``. With zero shift every domain of a
    panel is identical.
    """

    n_sensors: int = 20
    label_start: float = 0.5
    label_stop: float = 50.0
    label_step: float = 0.5
    domain_seed: int = 0
    shift_magnitude: float = 0.0
    panel_seed: int = 0
    strain_scale: float = 100.0
    name: str = ""

    def __post_init__(self):
        if self.n_sensors < 1:
            raise ConfigurationError("n_sensors must be >= 1")
        if not self.label_start < self.label_stop:
            raise ConfigurationError("label grid needs start < stop")
        if not self.label_step > 0:
            raise ConfigurationError("label grid needs step > 0")
        if self.label_start < 0:
            raise ConfigurationError("crack lengths cannot be negative")
        if self.shift_magnitude < 0:
            raise ConfigurationError("shift_magnitude must be >= 0")
        if not self.strain_scale > 0:
            raise ConfigurationError("strain_scale must be > 0")

    def label_grid(self) -> np.ndarray:
        count = int(math.floor((self.label_stop - self.label_start) / self.label_step + 1e-9)) + 1
        return self.label_start + self.label_step * np.arange(count)


@dataclass(frozen=True)
class OnlineSchedule:
    """Labeled/unlabeled index ranges (0-based) for each online prediction step."""

    n_t: int
    n_tl0: int
    delta_n: int
    batches: Tuple[Tuple[range, range], ...] = field(default_factory=tuple)

    @property
    def n_predictions(self) -> int:
        return sum(len(unl) for _, unl in self.batches)

    def __len__(self) -> int:
        return len(self.batches)

    def __iter__(self):
        return iter(self.batches)


@dataclass(frozen=True)
class LabelScaler:
    """Affine map of ``[lo, hi]`` onto ``[0, 1]``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise DegenerateInputError(f"label range is empty (lo={self.lo}, hi={self.hi})")

    @classmethod
    def fit(cls, labels) -> "LabelScaler":
        labels = np.asarray(labels, dtype=float)
        if labels.size == 0:
            raise DegenerateInputError("cannot scale an empty label vector")
        return cls(float(labels.min()), float(labels.max()))

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def scale(self, labels):
        return (np.asarray(labels, dtype=float) - self.lo) / self.span

    def unscale(self, scaled):
        return np.asarray(scaled, dtype=float) * self.span + self.lo


def _response_parameters(config: SyntheticPanelConfig):
    m = config.n_sensors
    base = np.random.default_rng(config.panel_seed)
    alpha = base.uniform(0.5, 2.0, m)
    beta = base.uniform(-0.1, 0.1, m)
    tau = base.uniform(10.0, 40.0, m)

    s = config.shift_magnitude
    local = np.random.default_rng([config.panel_seed, config.domain_seed])
    u_alpha, u_beta, u_tau = local.uniform(-1.0, 1.0, (3, m))
    alpha = alpha * np.exp(s * u_alpha)
    beta = beta + s * 0.1 * u_beta
    tau = tau * np.exp(s * u_tau)
    return alpha, beta, tau


def generate_synthetic_domain(config: SyntheticPanelConfig, labels=None) -> RegressionDomain:
    """Strain-like responses ``scale * (beta + alpha * y / (1 + y / tau))`` per sensor.

    Parameters
    ----------
    config : SyntheticPanelConfig
    labels : array-like, optional
        Crack lengths to evaluate instead of the config's regular grid
        (e.g. from :func:`clustered_labels`).
    """
    y = config.label_grid() if labels is None else np.sort(np.asarray(labels, dtype=float))
    alpha, beta, tau = _response_parameters(config)
    yy = y[:, None]
    strains = beta + alpha * yy / (1.0 + yy / tau)
    name = config.name or f"panel{config.panel_seed}-loc{config.domain_seed}"
    return RegressionDomain(config.strain_scale * strains, y, name)


def clustered_labels(n: int = 800, start: float = 16.53, stop: float = 50.0,
                     concentration: float = 3.0, seed: int = 0) -> np.ndarray:
    """Ascending crack lengths dense near ``start`` and sparse towards ``stop``.

    Emulates an experimental record where slow early growth is sampled
    heavily: ``start + (stop - start) * u**concentration`` for sorted
    uniform ``u``.
    """
    if n < 2 or not stop > start or concentration <= 0:
        raise ConfigurationError("need n >= 2, stop > start, concentration > 0")
    u = np.sort(np.random.default_rng(seed).uniform(0.0, 1.0, n))
    u[0], u[-1] = 0.0, 1.0
    return start + (stop - start) * u ** concentration


def damage_index(strains, tol: float = 1e-12) -> np.ndarray:
    """Divide each strain by the mean over sensors.

    Accepts one strain vector or a matrix with one vector per row.
    """
    strains = np.asarray(strains, dtype=float)
    mean = strains.mean(axis=-1, keepdims=True)
    if np.any(np.abs(mean) < tol):
        raise DegenerateInputError("mean strain is zero; damage index undefined")
    return strains / mean


def add_noise(domain: RegressionDomain, sigma_eps: float, seed: int = 0) -> RegressionDomain:
    """Additive zero-mean Gaussian noise of std ``sigma_eps`` on every feature entry."""
    if sigma_eps < 0 or not np.isfinite(sigma_eps):
        raise ConfigurationError(f"noise level must be finite and >= 0, got {sigma_eps}")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma_eps, domain.features.shape) if sigma_eps > 0 else 0.0
    return RegressionDomain(domain.features + noise, domain.labels, domain.name)


def scale_labels(labels) -> Tuple[np.ndarray, LabelScaler]:
    scaler = LabelScaler.fit(labels)
    return scaler.scale(labels), scaler


def online_split(domain, n_tl0: int, delta_n: int) -> OnlineSchedule:
    """Walk the (label-sorted) target domain in steps of ``delta_n`` after ``n_tl0`` labeled samples.

    ``domain`` may be a :class:`RegressionDomain` or the sample count. The
    last batch is shorter when ``delta_n`` does not divide the remainder.
    """
    n_t = domain if isinstance(domain, (int, np.integer)) else len(domain)
    if not 1 <= n_tl0 < n_t:
        raise ConfigurationError(f"need 1 <= n_tl0 < n_t, got n_tl0={n_tl0}, n_t={n_t}")
    if delta_n < 1:
        raise ConfigurationError(f"delta_n must be >= 1, got {delta_n}")
    batches = []
    start = n_tl0
    while start < n_t:
        stop = min(start + delta_n, n_t)
        batches.append((range(0, start), range(start, stop)))
        start = stop
    return OnlineSchedule(int(n_t), int(n_tl0), int(delta_n), tuple(batches))


def save_domain(domain: RegressionDomain, path) -> Path:
    path = Path(path)
    header = [f"feature_{k + 1}" for k in range(domain.n_features)] + ["label"]
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row, label in zip(domain.features, domain.labels):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(label))])
    return path


def load_domain(path, name: Optional[str] = None) -> RegressionDomain:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file, expected a header", line=1)
    header = [h.strip() for h in rows[0]]
    m = len(header) - 1
    expected = [f"feature_{k + 1}" for k in range(m)] + ["label"]
    if m < 1 or header != expected:
        raise ParseError(f"bad header {header!r}", line=1)

    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != m + 1:
            raise ParseError(f"expected {m + 1} fields, found {len(row)}", line=lineno)
        try:
            values.append([float(cell) for cell in row])
        except ValueError as exc:
            raise ParseError(f"non-numeric cell ({exc})", line=lineno) from None
    if not values:
        raise ParseError("no data rows (empty domain)", line=len(rows))
    data = np.array(values)
    return RegressionDomain(data[:, :m], data[:, m], name or path.stem)
