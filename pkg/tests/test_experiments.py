import csv
import json

import numpy as np
import pytest

from pncatoms.experiments import (CSV_COLUMNS, ExperimentConfig, Traffic, degradation,
                                  network_for, radius_sweep, run)
from pncatoms.topology import potential_flows

SMALL = dict(n_r=10, traffic="fixed:20", n_networks=2, n_assignments=3,
             schemes=("pnc9", "pnc-i", "snc9", "nonnc"))


@pytest.mark.parametrize("t,bench,expected", [(120, 100, 16.6667), (100, 100, 0.0), (200, 100, 50.0)])
def test_degradation(t, bench, expected):
    assert degradation(t, bench) == pytest.approx(expected, abs=1e-4)


def test_degradation_rejects_zero():
    with pytest.raises(ValueError):
        degradation(0, 10)


def test_traffic_parsing():
    assert Traffic.parse("fixed:100") == Traffic("fixed", 100)
    assert str(Traffic.parse(" saturated : 4 ")) == "saturated:4"
    for bad in ("fixed", "fixed:0", "bursty:3"):
        with pytest.raises(ValueError):
            Traffic.parse(bad)


def test_traffic_volumes():
    cfg = ExperimentConfig(**SMALL)
    net = network_for(cfg, 0)
    flows = potential_flows(net)
    rng = np.random.default_rng(0)
    assert Traffic("fixed", 37).draw(flows, 10, rng).sum() == 37
    senders = {s for s, _ in flows}
    c = Traffic("saturated", 3).draw(flows, 10, rng)
    assert c.sum() == 3 * len(senders)
    for node in senders:
        assert sum(c[i] for i, (s, _) in enumerate(flows) if s == node) == 3


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n_networks=0)
    with pytest.raises(ValueError):
        ExperimentConfig(schemes=("pnc9:fast",))
    with pytest.raises((ValueError, KeyError)):
        ExperimentConfig(schemes=("pnc12",))


@pytest.fixture(scope="module")
def small_result():
    return run(ExperimentConfig(**SMALL))


def test_run_is_deterministic(small_result):
    again = run(ExperimentConfig(**SMALL), workers=2)
    assert again.rows == small_result.rows


def test_seed_changes_results(small_result):
    other = run(ExperimentConfig(**{**SMALL, "seed": 1}))
    assert other.rows != small_result.rows


def test_metrics(small_result):
    m = small_result.metrics()
    assert m["pnc9"].mean_degradation == 0.0
    assert m["nonnc"].rsd == 0.0 and m["nonnc"].mean_ts == 40.0
    for name, metric in m.items():
        assert metric.trials == 6
        assert metric.rsd >= 0 and 0 <= metric.tail_gamma <= 1
        ts = small_result.slots(name)
        assert metric.rsd == pytest.approx(ts.std() / ts.mean())
        # throughput over all rounds equals K over the mean slot count
        assert 20 * len(ts) / ts.sum() == pytest.approx(20 * metric.throughput_scale)


def test_per_trial_ordering(small_result):
    by_trial = {}
    for r in small_result.rows:
        by_trial.setdefault((r["network_id"], r["assignment_id"]), {})[r["scheme"]] = r["slots"]
    for t in by_trial.values():
        assert t["pnc9"] <= t["pnc-i"] <= t["nonnc"] == 40
        assert t["pnc9"] <= t["snc9"] <= t["nonnc"]


def test_csv_and_summary(small_result, tmp_path):
    small_result.to_csv(tmp_path / "r.csv")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 6 * 4
    small_result.write_summary(tmp_path / "s.json")
    summary = json.loads((tmp_path / "s.json").read_text())
    assert set(summary["metrics"]) == set(SMALL["schemes"])
    assert summary["config"]["traffic"] == "fixed:20"


def test_greedy_suffix():
    res = run(ExperimentConfig(**{**SMALL, "schemes": ("pnc9", "pnc9:greedy")}))
    lp_slots, greedy = res.slots("pnc9"), res.slots("pnc9:greedy")
    assert len(greedy) == len(lp_slots) == 6
    assert np.all(greedy <= 2 * 20)


def test_radius_sweep():
    cfg = ExperimentConfig(**{**SMALL, "n_assignments": 1})
    single = radius_sweep(cfg, [0.5])
    assert single.spread == 0.0
    sweep = radius_sweep(cfg, [0.1, 0.9])
    vals = np.array(list(sweep.means.values()))
    assert sweep.spread == pytest.approx((vals.max() - vals.min()) / vals.mean())
    for r, res in sweep.results.items():
        assert sweep.means[r] == pytest.approx(res.slots("pnc9").mean())
