import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ofjdar.adapt import AdaptParams
from ofjdar.bench import (
    CURVES_COLUMNS,
    RESULTS_COLUMNS,
    SUMMARY_COLUMNS,
    DomainSource,
    ExperimentConfig,
    MethodId,
    ReportRow,
    ReportTable,
    aggregate_rows,
    emit_report,
    fit_baseline,
    load_results,
    rmse,
    run_matrix,
    run_online_task,
)
from ofjdar.dataset import RegressionDomain, SyntheticPanelConfig, generate_synthetic_domain, \
    online_split
from ofjdar.exceptions import ConfigurationError

SMALL = dict(label_start=0.5, label_stop=15.0, label_step=0.5)  # 30 samples
FAST = AdaptParams(k=20, max_iters=3)


def _domain(domain_seed, shift=0.5, panel_seed=0, **grid):
    return generate_synthetic_domain(SyntheticPanelConfig(
        domain_seed=domain_seed, shift_magnitude=shift, panel_seed=panel_seed, **grid))


def _small_config(**overrides):
    doc = {
        "domains": [{"name": "A", "domain_seed": 1, "shift_magnitude": 0.5, **SMALL},
                    {"name": "B", "domain_seed": 2, "shift_magnitude": 0.5, **SMALL}],
        "delta_ns": [1, 5, 10],
        "noise_levels": [0],
        "seeds": [0, 1, 2],
        "params": {"k": 20, "max_iters": 3},
        "gamma_exponents": [-2, 0, 2],
    }
    doc.update(overrides)
    return ExperimentConfig.from_dict(doc)


# rmse ----------------------------------------------------------------------------

def test_rmse_examples():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0
    assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))
    assert rmse([2.5], [-1.0]) == pytest.approx(3.5)
    with pytest.raises(ConfigurationError):
        rmse([1, 2], [1])
    with pytest.raises(ConfigurationError):
        rmse([], [])


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=30),
       st.randoms(use_true_random=False))
def test_rmse_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = rmse(*zip(*pairs))
    b = rmse(*zip(*shuffled))
    assert a >= 0
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


# baselines -------------------------------------------------------------------------

def test_baseline_pools():
    d_s = _domain(1)
    d_t = _domain(2)
    empty = RegressionDomain(np.zeros((0, d_s.n_features)), np.zeros(0), "empty")
    query = d_t.features[:5]
    assert fit_baseline("OSD", d_s, empty).predict(query).shape == (5,)
    ctd = fit_baseline("CTD", d_s, d_t.subset(np.arange(7)))
    assert ctd.model_.x.shape[0] == len(d_s) + 7
    osd = fit_baseline("OSD", d_s, None).predict(query)
    otd = fit_baseline("OTD", None, d_s).predict(query)
    np.testing.assert_array_equal(osd, otd)
    with pytest.raises(ConfigurationError):
        fit_baseline("OTD", d_s, empty)
    with pytest.raises(ConfigurationError):
        fit_baseline("OFJDAR", d_s, d_t)


def test_method_ids():
    assert [m.value for m in MethodId] == ["OSD", "OTD", "CTD", "OTCAR", "OFJDAR"]
    assert [m.adaptive for m in MethodId] == [False, False, False, True, True]


# online protocol -----------------------------------------------------------------

def test_protocol_counts_and_truths():
    d_s, d_t = _domain(1), _domain(2)
    log = run_online_task(d_s, d_t, "CTD", online_split(d_t, 5, 5))
    assert log.ok
    assert len(log.records) == 19 and log.n_predictions == 95
    np.testing.assert_array_equal(log.indices, np.arange(5, 100))
    np.testing.assert_array_equal(log.truths, d_t.labels[5:])
    assert [r.step for r in log.records] == list(range(19))
    assert [r.n_tl for r in log.records] == list(range(5, 100, 5))
    assert all(r.wall_time >= 0 for r in log.records)


def test_otd_error_resets_after_reveal():
    d_s, d_t = _domain(1), _domain(2)
    log = run_online_task(d_s, d_t, "OTD", online_split(d_t, 5, 5))
    errors = np.array([np.abs(r.predicted - r.true) for r in log.records[:-1]])
    # the first sample after a reveal is the one closest to labeled data
    assert np.median(errors[:, 0]) < 0.25 * np.median(errors[:, -1])
    assert np.median(errors[:, 0]) < 0.01


def test_adaptive_run_is_deterministic():
    d_s, d_t = _domain(1, **SMALL), _domain(2, **SMALL)
    sched = online_split(d_t, 5, 10)
    for method in ("OTCAR", "OFJDAR"):
        a = run_online_task(d_s, d_t, method, sched, FAST)
        b = run_online_task(d_s, d_t, method, sched, FAST)
        assert a.ok, a.error
        np.testing.assert_array_equal(a.predictions, b.predictions)
        assert [r.gamma for r in a.records] == [r.gamma for r in b.records]


@pytest.mark.parametrize("method", [m.value for m in MethodId])
def test_hidden_labels_are_never_read(method):
    d_s, d_t = _domain(1, **SMALL), _domain(2, **SMALL)
    cut = 15
    poisoned_labels = d_t.labels.copy()
    poisoned_labels[cut:] += 1e4
    poisoned = RegressionDomain(d_t.features, poisoned_labels, d_t.name)
    sched = online_split(d_t, 5, 5)
    clean = run_online_task(d_s, d_t, method, sched, FAST)
    dirty = run_online_task(d_s, poisoned, method, sched, FAST)
    compared = 0
    for a, b in zip(clean.records, dirty.records):
        if a.n_tl <= cut:
            np.testing.assert_array_equal(a.predicted, b.predicted)
            compared += 1
    assert compared == 3


def test_failures_are_recorded():
    class Broken:
        def fit(self, x, y):
            raise RuntimeError("boom")

    d_s, d_t = _domain(1, **SMALL), _domain(2, **SMALL)
    log = run_online_task(d_s, d_t, "CTD", online_split(d_t, 5, 5), regressor_factory=Broken)
    assert not log.ok
    assert "boom" in log.error and log.error.startswith("step 0")


def test_zero_shift_zero_noise_is_easy():
    d_s, d_t = _domain(1, shift=0.0), _domain(2, shift=0.0)
    sched = online_split(d_t, 5, 5)
    span = np.ptp(d_t.labels)
    for method in MethodId:
        log = run_online_task(d_s, d_t, method, sched)
        assert log.ok, log.error
        assert log.rmse() / span < 0.1, method


# experiment matrix ---------------------------------------------------------------

def test_matrix_size_and_aggregates(tmp_path):
    config = _small_config()
    table = run_matrix(config)
    assert len(table.rows) == 90
    assert table.all_ok, [r.status for r in table.rows if not r.ok][:3]
    assert all(r.rmse >= 0 for r in table.rows)
    agg = table.aggregates()
    assert len(agg) == 30
    for key, stats in agg.items():
        values = [r.rmse for r in table.rows if r.key() == key]
        assert stats["median_rmse"] == pytest.approx(float(np.median(values)))
        assert stats["n_ok"] == 3

    paths = emit_report(table, tmp_path)
    back = load_results(paths["results"])
    assert len(back.rows) == 90
    for a, b in zip(table.rows, back.rows):
        assert a.key() == b.key() and a.seed == b.seed and a.status == b.status
        assert abs(a.rmse - b.rmse) <= 1e-9
    lines = paths["curves"].read_text().splitlines()
    assert lines[0] == ",".join(CURVES_COLUMNS)
    assert paths["results"].read_text().splitlines()[0] == ",".join(RESULTS_COLUMNS)
    assert paths["summary"].read_text().splitlines()[0] == ",".join(SUMMARY_COLUMNS)
    assert len(lines) - 1 == sum(log.n_predictions for log in table.logs.values())


def test_matrix_is_byte_identical_across_runs(tmp_path):
    config = _small_config(delta_ns=[5], seeds=[3], noise_levels=[5])
    a = emit_report(run_matrix(config), tmp_path / "a")["results"].read_bytes()
    b = emit_report(run_matrix(config), tmp_path / "b")["results"].read_bytes()
    assert a == b


def test_failed_cells_do_not_abort(tmp_path):
    doc = {"domains": [{"name": "A", "domain_seed": 1, **SMALL},
                       {"name": "missing", "path": str(tmp_path / "nope.csv")}],
           "methods": ["OSD", "CTD"], "delta_ns": [5], "noise_levels": [0]}
    table = run_matrix(ExperimentConfig.from_dict(doc))
    assert len(table.rows) == 4
    assert not table.all_ok
    assert all(r.status.startswith("failed:") and r.rmse is None for r in table.rows)


def test_empty_report_is_header_only(tmp_path):
    paths = emit_report(ReportTable(), tmp_path)
    for name, columns in (("results", RESULTS_COLUMNS), ("curves", CURVES_COLUMNS),
                          ("summary", SUMMARY_COLUMNS)):
        assert paths[name].read_text() == ",".join(columns) + "\n"
    assert load_results(paths["results"]).rows == []


def test_failed_row_round_trip(tmp_path):
    rows = [ReportRow("A", "B", "OSD", 5, 0.0, 0, None, "failed: x, y"),
            ReportRow("A", "B", "OSD", 5, 0.0, 1, 0.125)]
    back = load_results(emit_report(ReportTable(rows), tmp_path)["results"]).rows
    assert back == rows
    stats = aggregate_rows(rows)[("A", "B", "OSD", 5, 0.0)]
    assert stats["n_failed"] == 1 and stats["median_rmse"] == 0.125


def test_config_parsing(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"domains": [{"name": "A"}, {"name": "B", "domain_seed": 4}],
                                "params": {"lam": 0.5, "quantiles": [0.1, 0.5, 0.9]}}))
    config = ExperimentConfig.load(path)
    assert config.delta_ns == (1, 5, 10)
    assert config.noise_levels == (0.0, 5.0, 10.0)
    assert config.params.lam == 0.5 and config.params.k == 100
    assert len(config.domain_pairs()) == 2
    assert len(list(config.cells())) == 2 * 5 * 3 * 3
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"domains": [{"name": "A"}], "bogus": 1})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"domains": []})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"domains": [{"name": "A"}], "pairs": [["A", "Z"]]}).domain_pairs()


def test_seed_changes_synthetic_panel():
    src = DomainSource.from_dict({"name": "A", "domain_seed": 1, "shift_magnitude": 0.5})
    a, b = src.materialize(0), src.materialize(1)
    assert not np.array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.features, src.materialize(0).features)
