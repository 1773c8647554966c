import json

import pytest

import lookaround


def test_sgd_fixed_point_closed_form():
    v = lookaround.fixed_point([1.0], [1.0], "sgd", 0.1)
    assert v[0] == pytest.approx(0.01 / (1.0 - 0.81), rel=1e-14)


def test_lookaround_fixed_point_matches_iteration():
    closed = lookaround.fixed_point([1.0, 2.0], [1.0, 0.5], "lookaround", 0.1, k=5, d=3)
    var, rounds, converged = lookaround.iterate_to_stationarity([1.0, 2.0], [1.0, 0.5], "lookaround", 0.1, k=5, d=3)
    assert converged and rounds > 0
    for c, it in zip(closed, var):
        assert it == pytest.approx(c, rel=1e-10)


def test_step_size_outside_range_raises():
    with pytest.raises(ValueError, match="1/L_max"):
        lookaround.fixed_point([1.0], [1.0], "sgd", 1.5)


def test_ordering_holds_for_three_replicas():
    assert lookaround.ordering_holds([1.0, 3.0], [1.0, 1.0], 0.1, 5, 3, 0.5)


def test_momentum_free_rate_is_sgd_contraction():
    assert lookaround.method_rate("cm", 1.0, 0.3, 0.0) == pytest.approx(0.7, abs=1e-15)
    assert lookaround.optimal_rate(100.0) == pytest.approx(9.0 / 11.0)


def test_rate_sweep_respects_lower_bound():
    rows = lookaround.rate_sweep([10.0, 1000.0], gamma_points=50)
    assert len(rows) == 6
    for row in rows:
        assert row["best_rate"] >= lookaround.optimal_rate(row["kappa"]) - 1e-9


def test_uniform_mean_of_identical_vectors_is_exact():
    x = [0.1, 1.0 / 3.0, -2.7]
    assert lookaround.uniform_mean([x, x, x]) == x


def test_dataset_is_deterministic():
    a = lookaround.make_dataset("spirals", 20, 10, 7)
    b = lookaround.make_dataset("spirals", 20, 10, 7)
    assert a == b
    assert len(a["train"]["x"]) == 20 and a["num_classes"] == 2


def test_config_validation_and_materialization():
    full = json.loads(lookaround.materialize_config('{"kind": "rate-sweep"}'))
    assert full["rate_sweep"]["k"] == 20
    with pytest.raises(ValueError, match="alpha"):
        lookaround.materialize_config('{"kind": "train", "train": {"alpha": 1.5}}')


def test_run_rate_sweep_experiment(tmp_path):
    cfg = {"kind": "rate-sweep", "rate_sweep": {"kappas": [10.0, 100.0], "gamma_points": 40}}
    result = lookaround.run_experiment(cfg, tmp_path)
    assert result["exit_code"] == 0, result
    assert (tmp_path / "summary.json").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["experiment"] == "rate-sweep"
    assert summary["violations"] == []
