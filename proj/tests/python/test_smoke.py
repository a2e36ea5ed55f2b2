import math

import pytest

import robustq


def test_grid_world_shape():
    mdp = robustq.grid_world(seed=3)
    assert mdp["states"] == 25
    assert mdp["actions"] == 4
    assert mdp["gamma"] == 0.5
    assert robustq.grid_world(seed=3) == mdp


def test_q_star_single_pair():
    mdp = {"states": 1, "actions": 1, "gamma": 0.5,
           "transition": [[[1.0]]], "mean_reward": [[2.0]]}
    assert robustq.q_star(mdp)[0][0] == pytest.approx(4.0, abs=1e-9)


def test_analyze_two_state_chain():
    mdp = {"states": 2, "actions": 1, "gamma": 0.5,
           "transition": [[[0.9, 0.1]], [[0.2, 0.8]]], "mean_reward": [[1.0], [-1.0]]}
    a = robustq.analyze(mdp)
    assert a["stationary"] == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    assert a["mixing_time"] == 4


def test_periodic_chain_raises():
    mdp = {"states": 2, "actions": 1, "gamma": 0.5,
           "transition": [[[0.0, 1.0]], [[1.0, 0.0]]], "mean_reward": [[0.0], [0.0]]}
    with pytest.raises(robustq.AssumptionViolated):
        robustq.analyze(mdp)


def test_estimators():
    assert robustq.median([1, 1, 1, 9, 9]) == 1
    assert robustq.trim_sc([2.5] * 40, 0.1, 0.1) == 2.5
    with pytest.raises(robustq.InsufficientData):
        robustq.median([])


def test_schedule_arithmetic():
    assert robustq.block_parameter(10, 25_000_000, 0.05) == 300
    assert robustq.known_delta1(0.05, 250_000) == pytest.approx(5e-8)
    assert robustq.burn_in(104 / 3, 8 / math.e, 1, 1, 1) == 1


def test_lower_bound_instance():
    lb = robustq.lower_bound(1.0, "1/25", 0.5)
    assert lb["observed_identical"]
    assert lb["observed_pmfs"][0] == ["1/50", "24/25", "1/50"]
    assert lb["q_star_gap"] >= lb["gap_lower_bound"]


def test_run_experiment_and_csv():
    cfg = {"learner": "vanilla", "horizon": 10, "seeds": 1}
    res = robustq.run_experiment(cfg)
    assert len(res["mean_error"]) == 10
    csv = robustq.experiment_csv(cfg).strip().splitlines()
    assert csv[0] == "step,mean_error,min_error,max_error,trigger_rate"
    assert len(csv) == 11


def test_robust_run_reports_invariants():
    cfg = {"learner": "robust-q", "horizon": 2000, "seeds": 2,
           "corruption": {"epsilon": 0.01, "value": -10000}}
    res = robustq.run_experiment(cfg)
    assert res["iterate_bound_violations"] == 0
    assert res["proxy_bound_violations"] == 0
    assert res["max_iterate_norm"] <= res["iterate_bound"]
