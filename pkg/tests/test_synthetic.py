import json

import numpy as np
import pytest

from presence_od import Marginals, detect_two_level, min_cost_flow_solve
from presence_od.geometry import cost_adjacency
from presence_od.synthetic import ScenarioConfig, ground_truth_flow, run_synthetic, square_zones


def test_layouts():
    assert detect_two_level(cost_adjacency(square_zones(9, "separated")))
    c = cost_adjacency(square_zones(9, "grid"))
    assert sorted(set(np.round(c.ravel(), 12))) == [0.0, 0.1, 1.0]


@pytest.mark.parametrize("gen", ["diagonal", "sender_receiver", "random"])
def test_ground_truth_total(gen):
    f = ground_truth_flow(ScenarioConfig(30, gen, total=10**6, seed=4))
    assert f.total() == 10**6 and f.values.min() > 0


def test_diagonal_recovered_exactly():
    res = run_synthetic(ScenarioConfig(20, "diagonal", seed=1))
    assert res.estimate == res.truth
    assert res.estimate_score.l1 == 0 and res.estimate_objective == 0.0


@pytest.mark.parametrize("n", [1, 2, 7, 40])
def test_sender_receiver_objective(n):
    res = run_synthetic(ScenarioConfig(n, "sender_receiver", seed=n))
    assert res.config.claims_optimal and res.objective_matches
    assert res.estimate.total() == 1_000_000
    # the general solver, which ignores the two-level shortcut, agrees
    m = Marginals(res.truth.row_sums(), res.truth.col_sums())
    assert min_cost_flow_solve(m, cost_adjacency(square_zones(n, "separated")))[1] == res.truth_objective


def test_random_scenario_reports(tmp_path):
    res = run_synthetic(ScenarioConfig(12, "random", "grid", seed=3), out_dir=tmp_path)
    assert not res.config.claims_optimal
    assert res.estimate_objective <= res.truth_objective
    doc = json.loads((tmp_path / "score.json").read_text())
    assert set(doc) >= {"estimator", "gravity", "objective_matches", "estimate_total"}
    assert doc["estimate_total"] == 1_000_000
    for name in ("truth.csv", "estimate.csv", "gravity.csv"):
        assert (tmp_path / name).exists()
    again = tmp_path / "again"
    run_synthetic(ScenarioConfig(12, "random", "grid", seed=3), out_dir=again)
    for name in ("truth.csv", "estimate.csv", "gravity.csv", "score.json"):
        assert (tmp_path / name).read_bytes() == (again / name).read_bytes()


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(0)
    with pytest.raises(ValueError):
        ScenarioConfig(3, generator="banded")
    with pytest.raises(ValueError):
        ScenarioConfig(3, layout="hex")
