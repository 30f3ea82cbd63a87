import csv
import json

import numpy as np
import pytest

from npvarsel import experiments as ex
from npvarsel import selection


def test_trial_seeds_are_stable_and_distinct():
    seeds = [ex.trial_seed(5, t) for t in range(50)]
    assert len(set(seeds)) == 50
    assert ex.trial_seed(5, 3) == seeds[3]
    assert ex.trial_seed(6, 3) != seeds[3]


def test_results_do_not_depend_on_parallelism():
    base = dict(instance={"generator": "single_frequency", "J": [1], "amplitude": 0.3}, n=150, d=8, trials=24)
    r1 = ex.run_monte_carlo(ex.ExperimentConfig(**base, jobs=1))
    r3 = ex.run_monte_carlo(ex.ExperimentConfig(**base, jobs=3))
    assert r1.dumps(include_log=True) == r3.dumps(include_log=True)


def test_error_rate_bookkeeping():
    cfg = ex.ExperimentConfig(instance={"generator": "single_frequency", "J": [0, 1], "amplitude": 0.25}, n=120, trials=40)
    res = ex.run_monte_carlo(cfg)
    r = res.rates
    assert r.trials == 40 == len(res.log)
    assert r.exact <= 1 - max(r.type1, r.type2) + 1e-12
    for name in ("type1", "type2", "exact"):
        lo, hi = r.interval(name)
        assert 0 <= lo <= getattr(r, name) <= hi <= 1


def test_wilson_interval_reference_value():
    # 0 successes out of 10: upper endpoint z^2 / (n + z^2)
    z2 = 1.959963984540054**2
    assert ex.wilson_interval(0, 10)[1] == pytest.approx(z2 / (10 + z2))


def test_bound_check_uses_upper_endpoint():
    chk = ex.BoundCheck("exact", 0.003, 290, 300)
    assert chk.successes / chk.trials < 0.997
    assert chk.passed == (chk.upper >= 0.997)


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ex.ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ex.ExperimentConfig(model="other")
    with pytest.raises(FileNotFoundError):
        ex.ExperimentConfig(instance={"path": str(tmp_path / "missing.json")})
    with pytest.raises(ValueError):
        ex.ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        ex.build_instance({"generator": "unknown"}, 4)


def test_config_from_json_resolves_relative_path(tmp_path):
    f = ex.build_instance({"generator": "single_frequency", "J": [0], "amplitude": 1.0}, 4)
    (tmp_path / "f.json").write_text(f.dumps())
    (tmp_path / "cfg.json").write_text(json.dumps({"instance": {"path": "f.json"}, "d": 4, "trials": 2}))
    cfg = ex.ExperimentConfig.from_json(tmp_path / "cfg.json")
    assert ex.build_instance(cfg.instance, 4).relevant_variables == {0}


def test_regression_monte_carlo_small():
    cfg = ex.ExperimentConfig(
        model="regression",
        instance={"generator": "pair_frequency", "pair": [0, 1], "amplitude": 2.0},
        n=6000, d=6, dstar=2, vartheta=2.0, sigma=1.0, L2=2.0, lam=0.5, trials=4,
    )  # fmt: skip
    res = ex.run_monte_carlo(cfg)
    assert res.rates.exact == 1.0
    assert all(r["stepwise_agrees"] and not r["early_stop"] for r in res.log)


def test_adaptive_checks_use_adaptive_bound():
    cfg = ex.ExperimentConfig(instance={"generator": "zero"}, grid=[2.0, 3.0], trials=3)
    res = ex.run_monte_carlo(cfg)
    assert [c.name for c in res.checks] == ["exact"]
    assert res.checks[0].bound == pytest.approx(selection.adaptive_error_bound(12, 2, 2))


def test_fig1_curve(tmp_path):
    path = tmp_path / "fig1.csv"
    rows = ex.emit_curves("fig1", np.linspace(0.2, 10, 30), path)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["gamma", "z_gamma", "l_gamma"]
    assert len(data) == 31
    assert float(data[5][1]) == rows[4][1]


def test_fig2_and_fig4_orderings():
    fig2 = ex.curve_rows("fig2", np.linspace(1.2, 30, 60))
    assert all(r[1] is None or r[1] <= r[0] for r in fig2)
    fig4 = ex.curve_rows("fig4", np.linspace(2, 30, 60))
    assert all(r[3] <= r[1] for r in fig4)


def test_curve_rejects_bad_grid():
    with pytest.raises(ValueError):
        ex.curve_rows("fig1", [1.0, 0.5])
    with pytest.raises(ValueError):
        ex.curve_rows("fig3")


def test_phase_point_classes():
    labels = {r[-1] for r in ex.phase_sweep([1e2, 1e6], [0.01, 1.0], [1, 2], d=30, L=4.0)}
    assert {"consistent", "impossible"} <= labels
    assert "both" not in labels


def test_sub_separation_signal_is_missed():
    kappa = 0.01 * selection.separation_rate(200, 12, 2)
    cfg = ex.ExperimentConfig(
        instance={"generator": "single_frequency", "J": [0, 1], "kappa": kappa}, n=200, trials=100, base_seed=3
    )
    assert ex.run_monte_carlo(cfg).rates.exact < 0.5


def test_hard_instance_generator():
    f = ex.build_instance({"generator": "hard", "J": [2, 5], "gamma": 1}, 8)
    assert f.relevant_variables == {2, 5}
