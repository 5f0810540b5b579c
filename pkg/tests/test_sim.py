import csv
import io
import json
import math

import pytest

from gtlab.bounds import fano_floor, t_lower
from gtlab.decoders import CapacityError
from gtlab.designs import Strategy
from gtlab.noise import NoiseModel
from gtlab.rng import derive_seed
from gtlab.sim import (CSV_HEADER, ConfigError, ExperimentConfig, _nth_combination,
                       resolve_strategy, run_experiment, sidecar_json, summaries_to_csv, sweep)


def config(**kw):
    base = dict(n_items=10, k_defects=2, model="noise-free", strategy="bernoulli:p=0.5",
                n_tests=5, n_trials=200, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_nth_combination_is_lexicographic():
    import itertools
    combos = list(itertools.combinations(range(7), 3))
    assert [_nth_combination(7, 3, i) for i in range(len(combos))] == combos


def test_stratified_binary_split_n8():
    s = run_experiment(config(n_items=8, k_defects=1, strategy="binary-split", n_tests=None,
                              n_trials=8, stratified=True), keep_trials=True)
    assert s.error_rate == 0.0 and s.mean_tests_used == 3.0
    assert sorted(r.truth for r in s.per_trial) == [(i,) for i in range(8)]


def test_stratified_gives_exact_average_for_a_fixed_design():
    cfg = config(n_items=6, k_defects=2, model="addition:q=0.1", n_tests=4, n_trials=15,
                 stratified=True)
    s = run_experiment(cfg, keep_trials=True)
    assert sorted(r.truth for r in s.per_trial) == sorted(
        _nth_combination(6, 2, i) for i in range(15))


def test_no_tests_calibration():
    s = run_experiment(config(n_tests=0, n_trials=5000, seed=1))
    expected = 1 - 1 / 45
    assert abs(s.error_rate - expected) <= 3 * s.std_error
    assert s.mean_tests_used == 0.0


@pytest.mark.parametrize("n_tests", [5, 20])
def test_fano_floor_respected(n_tests):
    s = run_experiment(config(n_items=50, n_tests=n_tests, n_trials=500, seed=11))
    assert s.fano_floor == pytest.approx(fano_floor(NoiseModel.noise_free(), 50, 2, n_tests))
    assert not s.floor_violated
    assert s.error_rate >= s.fano_floor - 3 * s.std_error


def test_summary_statistics():
    s = run_experiment(config())
    assert 0.0 <= s.error_rate <= 1.0
    assert s.ci_halfwidth == pytest.approx(1.959963984540054 * s.std_error + 0.5 / 200)
    assert s.n_errors == round(s.error_rate * 200)
    assert s.mean_tests_used == 5.0
    assert s.floor_violated == (s.error_rate + 3 * s.std_error < s.fano_floor)


def test_optional_checks():
    s = run_experiment(config(check_fano=False, check_bounds=True))
    assert s.fano_floor is None and not s.floor_violated
    assert s.t_lower <= s.t_upper


def test_opt_resolves_to_lower_bound_optimiser():
    p_star = t_lower(NoiseModel.dilution(0.5), 20, 2)[1]
    resolved = resolve_strategy(Strategy.parse("staged:p=opt,s=2"),
                                NoiseModel.dilution(0.5), 20, 2)
    assert resolved.p == p_star and resolved.stage_size == 2


def test_adaptive_run_counts_tests_used():
    s = run_experiment(config(n_items=32, k_defects=1, strategy="binary-split", n_tests=None,
                              n_trials=50))
    assert s.error_rate == 0.0 and s.mean_tests_used == 5.0


def test_binary_split_fixed_budget_stops_early():
    s = run_experiment(config(n_items=16, k_defects=1, strategy="binary-split", n_tests=2,
                              n_trials=100))
    assert s.mean_tests_used == 2.0 and s.error_rate > 0.5


def test_reproducible_across_worker_counts():
    cfg = config(model="add-dilute:q=0.1,u=0.3", strategy="staged:p=0.3,s=2", n_tests=6,
                 n_trials=120)
    a = run_experiment(cfg, jobs=1, keep_trials=True)
    b = run_experiment(cfg, jobs=3, keep_trials=True)
    assert a.per_trial == b.per_trial
    assert summaries_to_csv([a]) == summaries_to_csv([b])


def test_seed_changes_results():
    a = run_experiment(config(model="addition:q=0.2", seed=1), keep_trials=True)
    b = run_experiment(config(model="addition:q=0.2", seed=2), keep_trials=True)
    assert a.per_trial != b.per_trial


@pytest.mark.parametrize("kw", [dict(k_defects=0), dict(k_defects=10), dict(n_trials=0),
                                dict(n_tests=-1), dict(n_tests=None),
                                dict(stratified=True, n_trials=50),
                                dict(model="dilution:u=1"), dict(strategy="bernoulli:p=2")])
def test_invalid_configs(kw):
    with pytest.raises(ValueError):
        config(**kw)


def test_capacity_guard():
    with pytest.raises(CapacityError):
        run_experiment(config(n_items=200, k_defects=4, n_trials=1))


def test_sweep_more_tests_lower_error():
    cfg = config(n_items=100, strategy="bernoulli:p=opt", n_trials=400, seed=5)
    low, high = sweep(cfg, "T", [5, 40])
    assert high.error_rate + high.ci_halfwidth < low.error_rate - low.ci_halfwidth


def test_sweep_noise_degrades():
    cfg = config(n_items=30, model="addition:q=0.0", n_tests=15, n_trials=600, seed=8)
    rates = [s for s in sweep(cfg, "q", [0.0, 0.05, 0.1])]
    for a, b in zip(rates, rates[1:]):
        assert b.error_rate >= a.error_rate - (a.ci_halfwidth + b.ci_halfwidth)


def test_sweep_single_value_matches_direct_run():
    cfg = config(model="dilution:u=0.2", n_trials=100, seed=42)
    (swept,) = sweep(cfg, "T", [7])
    direct = run_experiment(ExperimentConfig(**{**cfg.__dict__, "n_tests": 7,
                                                "seed": derive_seed(42, 0)}))
    assert summaries_to_csv([swept]) == summaries_to_csv([direct])


def test_sweep_keeps_input_order_and_axes():
    cfg = config(n_trials=20)
    out = sweep(cfg, "p", [0.7, 0.2, 0.4])
    assert [s.strategy.p for s in out] == [0.7, 0.2, 0.4]
    assert [s.config.n_items for s in sweep(cfg, "N", [12, 9])] == [12, 9]
    assert str(sweep(config(model="dilution:u=0.1", n_trials=20), "u", [0.3])[0].config.model) \
        == "dilution:u=0.3"


@pytest.mark.parametrize("axis, cfg_kw", [("q", {}), ("u", dict(model="addition:q=0.1")),
                                          ("p", dict(strategy="binary-split")), ("z", {})])
def test_sweep_rejects_inapplicable_axis(axis, cfg_kw):
    with pytest.raises(ConfigError):
        sweep(config(**cfg_kw), axis, [0.1])


def test_csv_format():
    s = run_experiment(config(model="addition:q=0.05", n_trials=30))
    text = summaries_to_csv([s])
    assert text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER
    row = dict(zip(rows[0], rows[1]))
    assert row["model"] == "addition:q=0.05" and row["strategy"] == "bernoulli:p=0.5"
    assert row["floor_violated"] in ("true", "false")
    assert float(row["error_rate"]) == pytest.approx(s.error_rate, rel=1e-11)
    assert len(row["ci"].replace(".", "").lstrip("0")) <= 12


def test_sidecar_json_echoes_config():
    s = run_experiment(config(strategy="bernoulli:p=opt", n_trials=20))
    payload = json.loads(sidecar_json([s], {"command": "simulate"}))
    run = payload["runs"][0]
    assert payload["command"] == "simulate"
    assert run["n_items"] == 10 and run["strategy"] == "bernoulli:p=opt"
    assert math.isclose(float(run["resolved_strategy"].split("=")[1]), s.strategy.p)
    assert set(CSV_HEADER) <= set(run["summary"])
