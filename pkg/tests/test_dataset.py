import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ofjdar.dataset import (
    LabelScaler,
    RegressionDomain,
    SyntheticPanelConfig,
    add_noise,
    clustered_labels,
    damage_index,
    generate_synthetic_domain,
    load_domain,
    online_split,
    save_domain,
    scale_labels,
)
from ofjdar.exceptions import ConfigurationError, DegenerateInputError, ParseError


def test_grid_gives_100_samples():
    d = generate_synthetic_domain(SyntheticPanelConfig(label_start=0.5, label_stop=50, label_step=0.5))
    assert d.n_samples == 100
    assert d.n_features == 20
    assert d.labels[0] == 0.5 and d.labels[-1] == 50.0


def test_generation_is_deterministic():
    cfg = SyntheticPanelConfig(domain_seed=3, shift_magnitude=0.4, panel_seed=11)
    a, b = generate_synthetic_domain(cfg), generate_synthetic_domain(cfg)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()


def test_zero_shift_ignores_domain_seed():
    a = generate_synthetic_domain(SyntheticPanelConfig(domain_seed=1, shift_magnitude=0.0))
    b = generate_synthetic_domain(SyntheticPanelConfig(domain_seed=2, shift_magnitude=0.0))
    np.testing.assert_array_equal(a.features, b.features)


def test_shift_changes_domains():
    a = generate_synthetic_domain(SyntheticPanelConfig(domain_seed=1, shift_magnitude=0.5))
    b = generate_synthetic_domain(SyntheticPanelConfig(domain_seed=2, shift_magnitude=0.5))
    assert not np.allclose(a.features, b.features)


def test_features_follow_saturating_curve():
    cfg = SyntheticPanelConfig(n_sensors=3, panel_seed=5, strain_scale=1.0)
    d = generate_synthetic_domain(cfg)
    rng = np.random.default_rng(5)
    alpha, beta, tau = rng.uniform(0.5, 2.0, 3), rng.uniform(-0.1, 0.1, 3), rng.uniform(10, 40, 3)
    y = d.labels[:, None]
    np.testing.assert_allclose(d.features, beta + alpha * y / (1 + y / tau), rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_features_monotone_per_sensor(seed):
    d = generate_synthetic_domain(SyntheticPanelConfig(domain_seed=seed, shift_magnitude=0.8,
                                                       panel_seed=seed))
    assert np.all(np.diff(d.features, axis=0) > 0)


@pytest.mark.parametrize("kwargs", [
    dict(label_start=5, label_stop=5),
    dict(label_step=0),
    dict(n_sensors=0),
    dict(shift_magnitude=-1),
])
def test_invalid_config(kwargs):
    with pytest.raises(ConfigurationError):
        SyntheticPanelConfig(**kwargs)


def test_clustered_labels_dense_at_start():
    y = clustered_labels(800, 16.53, 50.0, seed=1)
    assert y.size == 800 and np.all(np.diff(y) >= 0)
    assert y[0] == pytest.approx(16.53) and y[-1] == pytest.approx(50.0)
    assert np.mean(y < 20) > 0.3


def test_damage_index_examples():
    np.testing.assert_allclose(damage_index([2, 2, 2, 2]), [1, 1, 1, 1])
    np.testing.assert_allclose(damage_index([1, 3]), [0.5, 1.5])
    with pytest.raises(DegenerateInputError):
        damage_index([1, -1])


def test_damage_index_rowwise():
    out = damage_index(np.array([[1.0, 3.0], [2.0, 2.0]]))
    np.testing.assert_allclose(out, [[0.5, 1.5], [1.0, 1.0]])


@given(st.lists(st.floats(0.1, 1e4), min_size=1, max_size=30))
def test_damage_index_has_unit_mean(strains):
    assert abs(damage_index(strains).mean() - 1.0) < 1e-12


def _domain(n=100, m=1000):
    return RegressionDomain(np.zeros((n, m)), np.linspace(0, 1, n))


def test_zero_noise_is_identity():
    d = generate_synthetic_domain(SyntheticPanelConfig())
    np.testing.assert_array_equal(add_noise(d, 0.0, seed=1).features, d.features)


def test_noise_level_statistics():
    d = _domain()
    noisy = add_noise(d, 10.0, seed=123)
    diff = (noisy.features - d.features).ravel()
    assert diff.size == 100_000
    assert abs(diff.std() - 10.0) < 0.02 * 10.0
    np.testing.assert_array_equal(noisy.labels, d.labels)


def test_noise_seeds():
    d = _domain(10, 10)
    a, b, c = add_noise(d, 1.0, 1), add_noise(d, 1.0, 1), add_noise(d, 1.0, 2)
    np.testing.assert_array_equal(a.features, b.features)
    assert not np.array_equal(a.features, c.features)


def test_negative_noise_rejected():
    with pytest.raises(ConfigurationError):
        add_noise(_domain(3, 3), -1.0)


def test_scale_labels_examples():
    scaled, scaler = scale_labels([0.5, 25.25, 50])
    np.testing.assert_allclose(scaled, [0, 0.5, 1])
    np.testing.assert_allclose(scale_labels([10, 20])[0], [0, 1])
    with pytest.raises(DegenerateInputError):
        scale_labels([5, 5, 5])


@given(st.lists(st.floats(0, 100), min_size=2, max_size=40).filter(lambda v: max(v) > min(v)))
def test_scaler_round_trip(values):
    scaled, scaler = scale_labels(values)
    assert scaled.min() == 0 and scaled.max() == 1
    np.testing.assert_allclose(scaler.unscale(scaled), values, rtol=0, atol=1e-12)


def test_online_split_paper_protocol():
    sched = online_split(100, 5, 5)
    assert len(sched) == 19
    assert sched.n_predictions == 95


def test_online_split_unit_steps():
    sched = online_split(100, 5, 1)
    assert len(sched) == 95
    assert all(len(unl) == 1 for _, unl in sched)


def test_online_split_truncated_last_batch():
    sched = online_split(12, 5, 10)
    assert len(sched) == 1
    assert list(sched.batches[0][1]) == list(range(5, 12))


@given(st.integers(2, 200), st.data())
def test_online_split_partitions_target(n_t, data):
    n_tl0 = data.draw(st.integers(1, n_t - 1))
    dn = data.draw(st.integers(1, n_t))
    sched = online_split(n_t, n_tl0, dn)
    assert list(sched.batches[0][0]) == list(range(n_tl0))
    predicted = [i for _, unl in sched for i in unl]
    assert predicted == list(range(n_tl0, n_t))
    for (lab, unl), (lab_next, _) in zip(sched.batches, sched.batches[1:]):
        assert lab_next.stop == unl.stop
        assert len(unl) == dn
    assert 1 <= len(sched.batches[-1][1]) <= dn


def test_online_split_rejects_bad_sizes():
    with pytest.raises(ConfigurationError):
        online_split(10, 10, 1)
    with pytest.raises(ConfigurationError):
        online_split(10, 2, 0)


def test_domain_invariants():
    with pytest.raises(ConfigurationError):
        RegressionDomain(np.zeros((3, 2)), [1, 2])
    with pytest.raises(ConfigurationError):
        RegressionDomain(np.zeros((2, 2)), [2, 1])
    with pytest.raises(ConfigurationError):
        RegressionDomain(np.zeros((2, 2)), [-1, 1])
    with pytest.raises(ConfigurationError):
        RegressionDomain(np.full((2, 2), np.nan), [1, 2])


def test_csv_round_trip(tmp_path):
    d = add_noise(generate_synthetic_domain(SyntheticPanelConfig(shift_magnitude=0.3)), 3.0, 1)
    path = save_domain(d, tmp_path / "d.csv")
    back = load_domain(path)
    np.testing.assert_allclose(back.features, d.features, rtol=0, atol=1e-12)
    np.testing.assert_allclose(back.labels, d.labels, rtol=0, atol=1e-12)
    assert path.read_text().splitlines()[0] == ",".join(
        [f"feature_{k}" for k in range(1, 21)] + ["label"])


def test_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("feature_1,feature_2,label\n")
    with pytest.raises(ParseError, match="empty domain"):
        load_domain(path)


def test_csv_short_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("feature_1,feature_2,label\n1,2,3\n4,5\n")
    with pytest.raises(ParseError, match="line 3"):
        load_domain(path)


def test_csv_non_numeric(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("feature_1,label\n1,2\nx,3\n")
    with pytest.raises(ParseError, match="line 3"):
        load_domain(path)
