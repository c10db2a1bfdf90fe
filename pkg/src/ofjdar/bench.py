"""Online damage-quantification benchmark.

A run walks the target domain in order of crack growth. At each step the
next ``delta_n`` samples are predicted from their features alone, then their
labels are revealed and they join the labeled pool. Runs are swept over
domain pairs, methods, step sizes, noise levels and seeds, and reported as
CSV.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .adapt import AdaptParams, ofjdar, optimize_gamma, otcar
from .dataset import (
    OnlineSchedule,
    RegressionDomain,
    SyntheticPanelConfig,
    add_noise,
    generate_synthetic_domain,
    load_domain,
    online_split,
)
from .exceptions import ConfigurationError, OfjdarError
from .regress import GaussianProcessRegressor

__all__ = [
    "MethodId",
    "StepRecord",
    "PredictionLog",
    "ReportRow",
    "ReportTable",
    "ExperimentConfig",
    "DomainSource",
    "rmse",
    "fit_baseline",
    "run_online_task",
    "run_cell",
    "run_matrix",
    "emit_report",
    "load_results",
    "aggregate_rows",
    "RESULTS_COLUMNS",
    "CURVES_COLUMNS",
    "SUMMARY_COLUMNS",
]

log = logging.getLogger(__name__)

RESULTS_COLUMNS = ("source", "target", "method", "delta_n", "noise", "seed", "rmse", "status")
CURVES_COLUMNS = ("source", "target", "method", "delta_n", "noise", "seed",
                  "step", "index", "label", "prediction", "abs_error")
SUMMARY_COLUMNS = ("source", "target", "method", "delta_n", "noise",
                   "n_ok", "n_failed", "median_rmse", "q25_rmse", "q75_rmse", "iqr_rmse")


class MethodId(str, enum.Enum):
    OSD = "OSD"
    OTD = "OTD"
    CTD = "CTD"
    OTCAR = "OTCAR"
    OFJDAR = "OFJDAR"

    @property
    def adaptive(self) -> bool:
        return self in (MethodId.OTCAR, MethodId.OFJDAR)


def rmse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=float).reshape(-1)
    if y_true.size != y_pred.size:
        raise ConfigurationError(f"length mismatch: {y_true.size} vs {y_pred.size}")
    if y_true.size == 0:
        raise ConfigurationError("RMSE of an empty set is undefined")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def fit_baseline(method, d_s: RegressionDomain, d_tl: RegressionDomain,
                 regressor_factory: Optional[Callable] = None):
    """Regressor on the method's training pool in the original feature space."""
    method = MethodId(method)
    factory = regressor_factory or GaussianProcessRegressor
    if method is MethodId.OSD:
        pools = [d_s]
    elif method is MethodId.OTD:
        pools = [d_tl]
    elif method is MethodId.CTD:
        pools = [d_s, d_tl]
    else:
        raise ConfigurationError(f"{method.value} is not a baseline")
    if any(d is None or len(d) == 0 for d in pools):
        raise ConfigurationError(f"{method.value} needs a non-empty training pool")
    x = np.vstack([d.features for d in pools])
    y = np.concatenate([d.labels for d in pools])
    return factory().fit(x, y)


@dataclass(frozen=True)
class StepRecord:
    step: int
    n_tl: int
    indices: Tuple[int, ...]
    predicted: np.ndarray
    true: np.ndarray
    wall_time: float
    gamma: Optional[float] = None


@dataclass
class PredictionLog:
    method: MethodId
    n_t: int
    n_tl0: int
    delta_n: int
    records: List[StepRecord] = field(default_factory=list)
    status: str = "ok"
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def indices(self) -> np.ndarray:
        return np.array([i for r in self.records for i in r.indices], dtype=int)

    @property
    def predictions(self) -> np.ndarray:
        return np.concatenate([r.predicted for r in self.records]) if self.records else np.zeros(0)

    @property
    def truths(self) -> np.ndarray:
        return np.concatenate([r.true for r in self.records]) if self.records else np.zeros(0)

    @property
    def n_predictions(self) -> int:
        return sum(len(r.indices) for r in self.records)

    def rmse(self) -> float:
        return rmse(self.truths, self.predictions)

    def abs_errors(self) -> np.ndarray:
        return np.abs(self.predictions - self.truths)


def _predict_step(method: MethodId, d_s, x_tl, y_tl, x_tu, params, gamma_grid, holdout,
                  regressor_factory):
    if not method.adaptive:
        d_tl = RegressionDomain(x_tl, y_tl, "labeled")
        return fit_baseline(method, d_s, d_tl, regressor_factory).predict(x_tu), None
    fn = ofjdar if method is MethodId.OFJDAR else otcar
    kernel = None
    if holdout >= 1:
        kernel = optimize_gamma(d_s.features, d_s.labels, x_tl, y_tl, x_tu, gamma_grid,
                                holdout, params, fn, regressor_factory)
    result = fn(d_s.features, d_s.labels, x_tl, y_tl, x_tu, params, kernel, regressor_factory)
    return result.predictions, result.model.kernel.gamma


def run_online_task(d_s: RegressionDomain, d_t: RegressionDomain, method,
                    schedule: OnlineSchedule, params: Optional[AdaptParams] = None,
                    seed: int = 0, gamma_grid=None,
                    regressor_factory: Optional[Callable] = None) -> PredictionLog:
    """Predict every scheduled target sample once, revealing labels after each step.

    Each step hands the method only the features of the current batch; the
    batch labels are read after the prediction is stored. Adaptive methods
    re-select the kernel width every step with a holdout of
    ``min(delta_n, n_tl - 1)`` newest labeled samples. ``seed`` is recorded
    for bookkeeping; every method here is deterministic.
    """
    method = MethodId(method)
    params = params or AdaptParams()
    if schedule.n_t != len(d_t):
        raise ConfigurationError("schedule was built for a different target domain")
    out = PredictionLog(method, schedule.n_t, schedule.n_tl0, schedule.delta_n)
    features = d_t.features
    for step, (labeled, unlabeled) in enumerate(schedule):
        lab = slice(labeled.start, labeled.stop)
        unl = slice(unlabeled.start, unlabeled.stop)
        x_tl, y_tl = features[lab], d_t.labels[lab]
        x_tu = features[unl]
        holdout = min(len(x_tu), len(x_tl) - 1)
        t0 = time.perf_counter()
        try:
            y_hat, gamma = _predict_step(method, d_s, x_tl, y_tl, x_tu, params, gamma_grid,
                                         holdout, regressor_factory)
            y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
            if y_hat.shape != (len(x_tu),) or not np.all(np.isfinite(y_hat)):
                raise OfjdarError("method returned malformed predictions")
        except Exception as exc:  # recorded, never skipped silently
            out.status = "failed"
            out.error = f"step {step}: {type(exc).__name__}: {exc}"
            log.warning("%s failed at step %d: %s", method.value, step, exc)
            break
        elapsed = time.perf_counter() - t0
        revealed = d_t.labels[unl].copy()
        out.records.append(StepRecord(step, len(x_tl), tuple(unlabeled), y_hat, revealed,
                                      elapsed, gamma))
    return out


@dataclass(frozen=True)
class DomainSource:
    """One entry of an experiment's domain list: a CSV file or a synthetic config.

    Synthetic domains take the run seed as their panel seed, so every seed
    is a fresh panel with the same per-location shift structure.
    """

    name: str
    path: Optional[str] = None
    synthetic: Optional[SyntheticPanelConfig] = None
    labels: Optional[Tuple[float, ...]] = None

    def materialize(self, seed: int, base_dir: Optional[Path] = None) -> RegressionDomain:
        if self.path is not None:
            path = Path(self.path)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            domain = load_domain(path, self.name)
            return RegressionDomain(domain.features, domain.labels, self.name)
        config = replace(self.synthetic, panel_seed=self.synthetic.panel_seed + seed,
                         name=self.name)
        return generate_synthetic_domain(config, self.labels)

    @classmethod
    def from_dict(cls, entry: dict) -> "DomainSource":
        entry = dict(entry)
        name = entry.pop("name")
        if "path" in entry:
            return cls(name, path=entry["path"])
        labels = entry.pop("labels", None)
        return cls(name, synthetic=SyntheticPanelConfig(name=name, **entry),
                   labels=None if labels is None else tuple(labels))


@dataclass(frozen=True)
class ExperimentConfig:
    domains: Tuple[DomainSource, ...]
    methods: Tuple[MethodId, ...] = tuple(MethodId)
    delta_ns: Tuple[int, ...] = (1, 5, 10)
    noise_levels: Tuple[float, ...] = (0.0, 5.0, 10.0)
    seeds: Tuple[int, ...] = (0,)
    n_tl0: int = 5
    params: AdaptParams = AdaptParams()
    pairs: Optional[Tuple[Tuple[str, str], ...]] = None
    gamma_exponents: Optional[Tuple[float, ...]] = None
    base_dir: Optional[str] = None

    def domain_pairs(self) -> List[Tuple[DomainSource, DomainSource]]:
        by_name = {d.name: d for d in self.domains}
        if len(by_name) != len(self.domains):
            raise ConfigurationError("domain names must be unique")
        if self.pairs is not None:
            try:
                return [(by_name[s], by_name[t]) for s, t in self.pairs]
            except KeyError as exc:
                raise ConfigurationError(f"unknown domain {exc}") from None
        return [(s, t) for s, t in itertools.permutations(self.domains, 2)]

    def cells(self):
        for (src, tgt), method, dn, noise, seed in itertools.product(
                self.domain_pairs(), self.methods, self.delta_ns, self.noise_levels, self.seeds):
            yield src, tgt, method, dn, noise, seed

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "ExperimentConfig":
        known = {"domains", "methods", "delta_ns", "noise_levels", "seeds", "n_tl0",
                 "params", "pairs", "gamma_exponents"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if not doc.get("domains"):
            raise ConfigurationError("config lists no domains")
        kwargs = {"domains": tuple(DomainSource.from_dict(d) for d in doc["domains"])}
        if "methods" in doc:
            kwargs["methods"] = tuple(MethodId(m) for m in doc["methods"])
        for key in ("delta_ns", "seeds"):
            if key in doc:
                kwargs[key] = tuple(int(v) for v in doc[key])
        if "noise_levels" in doc:
            kwargs["noise_levels"] = tuple(float(v) for v in doc["noise_levels"])
        if "n_tl0" in doc:
            kwargs["n_tl0"] = int(doc["n_tl0"])
        if "params" in doc:
            params = dict(doc["params"])
            if "quantiles" in params and params["quantiles"] is not None:
                params["quantiles"] = tuple(params["quantiles"])
            kwargs["params"] = AdaptParams(**params)
        if "pairs" in doc:
            kwargs["pairs"] = tuple((str(s), str(t)) for s, t in doc["pairs"])
        if "gamma_exponents" in doc:
            kwargs["gamma_exponents"] = tuple(float(v) for v in doc["gamma_exponents"])
        if base_dir is not None:
            kwargs["base_dir"] = str(base_dir)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


@dataclass(frozen=True)
class ReportRow:
    source: str
    target: str
    method: str
    delta_n: int
    noise: float
    seed: int
    rmse: Optional[float]
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def key(self):
        return (self.source, self.target, self.method, self.delta_n, self.noise)


@dataclass
class ReportTable:
    rows: List[ReportRow] = field(default_factory=list)
    logs: Dict[tuple, PredictionLog] = field(default_factory=dict)

    def aggregates(self) -> Dict[tuple, dict]:
        return aggregate_rows(self.rows)

    def median(self, **match) -> float:
        values = [r.rmse for r in self.select(**match) if r.ok]
        return float(np.median(values)) if values else float("nan")

    def select(self, **match) -> List[ReportRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in match.items())]

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)


def aggregate_rows(rows: Sequence[ReportRow]) -> Dict[tuple, dict]:
    """Median and interquartile range of RMSE over seeds, per configuration."""
    groups: Dict[tuple, List[ReportRow]] = {}
    for row in rows:
        groups.setdefault(row.key(), []).append(row)
    out = {}
    for key, group in groups.items():
        values = np.array([r.rmse for r in group if r.ok], dtype=float)
        if values.size:
            q25, med, q75 = np.percentile(values, [25, 50, 75])
        else:
            q25 = med = q75 = float("nan")
        out[key] = {
            "n_ok": int(values.size),
            "n_failed": len(group) - int(values.size),
            "median_rmse": float(med),
            "q25_rmse": float(q25),
            "q75_rmse": float(q75),
            "iqr_rmse": float(q75 - q25),
        }
    return out


def _gamma_grid_for(config: ExperimentConfig, d_s, d_t):
    if config.gamma_exponents is None:
        return None
    from .adapt import median_sq_distance, standardize
    rows = np.vstack([d_s.features, d_t.features[: config.n_tl0]])
    if config.params.standardize:
        rows = standardize(rows)[0]
    scale = median_sq_distance(rows)
    return [2.0 ** e / scale for e in config.gamma_exponents]


def run_cell(config: ExperimentConfig, src: DomainSource, tgt: DomainSource, method,
             delta_n: int, noise: float, seed: int) -> Tuple[ReportRow, PredictionLog]:
    """One (pair, method, step size, noise, seed) run; failures become a failed row."""
    method = MethodId(method)
    base_dir = Path(config.base_dir) if config.base_dir else None
    log_ = None
    try:
        d_s = src.materialize(seed, base_dir)
        d_t = tgt.materialize(seed, base_dir)
        if noise > 0:
            index = {d.name: i for i, d in enumerate(config.domains)}
            d_s = add_noise(d_s, noise, seed=[seed, index[src.name], 1])
            d_t = add_noise(d_t, noise, seed=[seed, index[tgt.name], 1])
        schedule = online_split(d_t, config.n_tl0, delta_n)
        log_ = run_online_task(d_s, d_t, method, schedule, config.params, seed,
                               _gamma_grid_for(config, d_s, d_t))
        if log_.ok:
            row_rmse, status = log_.rmse(), "ok"
        else:
            row_rmse, status = None, f"failed: {log_.error}"
    except Exception as exc:
        row_rmse, status = None, f"failed: {type(exc).__name__}: {exc}"
    row = ReportRow(src.name, tgt.name, method.value, int(delta_n), float(noise), int(seed),
                    row_rmse, status)
    return row, log_


def _run_cell_args(args):
    return run_cell(*args)


def run_matrix(config: ExperimentConfig, workers: int = 1, progress: Callable = None) -> ReportTable:
    """Every cell of the experiment's cross product, optionally in a process pool."""
    jobs = [(config, *cell) for cell in config.cells()]
    table = ReportTable()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_args, jobs))
    else:
        results = []
        for i, job in enumerate(jobs):
            results.append(_run_cell_args(job))
            if progress is not None:
                progress(i + 1, len(jobs), results[-1][0])
    for row, log_ in results:
        table.rows.append(row)
        if log_ is not None:
            table.logs[(row.source, row.target, row.method, row.delta_n, row.noise, row.seed)] = log_
    return table


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(table: ReportTable, out_dir) -> Dict[str, Path]:
    """Write ``results.csv``, ``curves.csv`` and ``summary.csv`` into ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {name: out_dir / f"{name}.csv" for name in ("results", "curves", "summary")}
        with paths["results"].open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RESULTS_COLUMNS)
            for r in table.rows:
                writer.writerow([_fmt(getattr(r, c)) for c in RESULTS_COLUMNS])
        with paths["curves"].open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CURVES_COLUMNS)
            for key, log_ in table.logs.items():
                for rec in log_.records:
                    for idx, truth, pred in zip(rec.indices, rec.true, rec.predicted):
                        writer.writerow([*(_fmt(v) for v in key), rec.step, idx, _fmt(float(truth)),
                                         _fmt(float(pred)), _fmt(float(abs(pred - truth)))])
        write_summary(table.rows, paths["summary"])
    except OSError as exc:
        raise OSError(f"cannot write report to {out_dir}: {exc}") from exc
    return paths


def write_summary(rows: Sequence[ReportRow], path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for key, stats in aggregate_rows(rows).items():
            writer.writerow([*(_fmt(v) for v in key),
                             *(_fmt(stats[c]) for c in SUMMARY_COLUMNS[5:])])
    return path


def load_results(path) -> ReportTable:
    """Parse a ``results.csv`` written by :func:`emit_report`."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RESULTS_COLUMNS:
            raise ConfigurationError(f"{path}: unexpected header {header}")
        rows = []
        for rec in reader:
            values = dict(zip(RESULTS_COLUMNS, rec))
            rows.append(ReportRow(
                values["source"], values["target"], values["method"], int(values["delta_n"]),
                float(values["noise"]), int(values["seed"]),
                float(values["rmse"]) if values["rmse"] else None, values["status"],
            ))
    return ReportTable(rows)
