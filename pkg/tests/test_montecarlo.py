from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from breakscan import BreakSet, ScenarioConfig, hausdorff_distance, run_scenario
from breakscan.montecarlo import default_M, replication_seeds
from conftest import random_panel


def test_hausdorff_examples():
    assert hausdorff_distance(BreakSet([12], 30), BreakSet([10, 20], 30)) == 8
    A = BreakSet([5, 9], 30)
    assert hausdorff_distance(A, A) == 0
    assert hausdorff_distance(BreakSet([], 30), BreakSet([5], 30)) == 1
    assert hausdorff_distance(BreakSet([12], 40), BreakSet([10, 20], 40), relative=True) == pytest.approx(0.2)


def test_default_M():
    p = random_panel(100, q=2, r=2, s=2)
    assert default_M(p, 13) == 6
    assert default_M(random_panel(2000), 9) == 10


def test_seeds_are_stable():
    assert replication_seeds(7, 5) == replication_seeds(7, 5)
    assert replication_seeds(7, 5)[:3] == replication_seeds(7, 3)
    assert len(set(replication_seeds(7, 50))) == 50


@pytest.mark.parametrize("scenario,T", [("SB1", 100), ("SB4", 250)])
def test_noiseless_scenario(scenario, T):
    rep = run_scenario(ScenarioConfig(scenario, T, reps=5, sigma_u=0.0))
    assert rep.pce == 100 and rep.hausdorff_mean == 0
    assert rep.failures == 0
    np.testing.assert_allclose(rep.tau_std, 0)


def test_report_and_workers(tmp_path):
    cfg = ScenarioConfig("SB1", 200, reps=8, seed=3, run_dp=True)
    rep = run_scenario(cfg)
    par = run_scenario(ScenarioConfig("SB1", 200, reps=8, seed=3, run_dp=True, workers=3))
    assert rep.m_counts == par.m_counts and rep.tau_mean == par.tau_mean
    assert 0 <= rep.pce <= 100
    assert sum(rep.m_counts.values()) == 8
    assert rep.dp_tau_mean is not None and len(rep.dp_tau_mean) == 1
    data = json.loads(rep.to_json(tmp_path / "r.json"))
    assert data["scenario_id"] == "SB1-full-T200-c1" and data["reps"] == 8
    rep.to_csv(tmp_path / "r.csv")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert len(rows) == 1 and float(rows[0]["pce"]) == rep.pce


def test_failures_are_counted():
    # h_min far too large for any break: first step stops with an error
    rep = run_scenario(ScenarioConfig("SB1", 100, reps=3, h_min=60, M=1))
    assert rep.failures == 3 and rep.pce == 0
    assert rep.m_counts == {-1: 3}


def test_reps_validation():
    with pytest.raises(ValueError):
        run_scenario(ScenarioConfig("SB1", 100, reps=0))


@pytest.mark.slow
def test_pce_monotone_in_T():
    # one inversion of at most 2 points is allowed as Monte Carlo noise
    for scenario, ladder in (("SB1", (100, 200, 400)), ("SB2", (150, 300))):
        pce = [run_scenario(ScenarioConfig(scenario, T, reps=100, seed=11)).pce for T in ladder]
        drops = [a - b for a, b in zip(pce, pce[1:]) if b < a]
        assert len(drops) <= 1 and all(d <= 2 for d in drops), pce
