"""The twelve acceptance criteria, one test each.

Every test records a ``CRITERION n: PASS|FAIL`` line (shown in the terminal
summary) before asserting. The statistical criteria share a handful of
desk-scale experiment runs: 10 networks x 10 assignments per cell.
"""

import random
import time
from dataclasses import replace

import numpy as np
import pytest
from conftest import (SQUARE_ALPHA, SQUARE_DEMAND, SQUARE_POSITIONS, MIXED_FLOWS, VERDICTS,
                      demand_vector, ilp_optimum)

from pncatoms import mac
from pncatoms.atoms import Scheme, catalog, get_atom, molecule, slot_cost
from pncatoms.experiments import ExperimentConfig, degradation, radius_sweep, run
from pncatoms.identification import build_matrix, identify
from pncatoms.patterns import min_slots, verify
from pncatoms.scheduler import NONNC_COST, schedule
from pncatoms.topology import LocalNetwork, potential_flows

# slot costs per atom class: PNC, SNC, Non-NC
SLOT_COSTS = {
    "I": (2, 3, 4), "II": (2, 3, 4), "III": (4, 5, 6), "IV": (4, 5, 6), "V": (2, 3, 4),
    "VI": (3, 5, 8), "VII": (4, 5, 6), "VIII": (3, 4, 6), "IX": (5, 8, 12),
}
DESK = dict(n_networks=10, n_assignments=10, solver="auto", seed=0)
SUBSET, PAIR = "pnc-i-ii-v", "pnc-i-v"
SINGLES = tuple(f"pnc-{a.id.lower()}" for a in catalog())


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def greedy_gap(result, scheme: str) -> float:
    lp_ts, greedy = result.slots(scheme), result.slots(f"{scheme}:greedy")
    return float(np.mean([degradation(g, t) for g, t in zip(greedy, lp_ts)]))


@pytest.fixture(scope="module")
def cell_30_100():
    schemes = ("pnc9", "snc9", "pnc-twrc", SUBSET, PAIR, "pnc9:greedy",
               f"{SUBSET}:greedy", "nonnc")
    return run(ExperimentConfig(n_r=30, traffic="fixed:100", schemes=schemes, **DESK))


@pytest.fixture(scope="module")
def cell_30_1000():
    return run(ExperimentConfig(n_r=30, traffic="fixed:1000",
                                schemes=("pnc9", SUBSET, PAIR, "nonnc"), **DESK))


@pytest.fixture(scope="module")
def cell_10_100():
    schemes = ("pnc9", *SINGLES, "pnc6", SUBSET, PAIR, "pnc9:greedy", f"{SUBSET}:greedy",
               "nonnc")
    return run(ExperimentConfig(n_r=10, traffic="fixed:100", schemes=schemes, **DESK))


def test_criterion_01_catalog():
    start = time.perf_counter()
    verified = all(verify(a, s) for a in catalog() for s in (Scheme.PNC, Scheme.SNC))
    costs = {a.id: tuple(slot_cost(a.id, s) for s in (Scheme.PNC, Scheme.SNC, Scheme.NONNC))
             for a in catalog()}
    elapsed = time.perf_counter() - start
    ok = verified and costs == SLOT_COSTS and elapsed < 1.0
    verdict(1, ok, f"patterns verify={verified}, costs match={costs == SLOT_COSTS}, {elapsed:.2f}s")


def test_criterion_02_optimality():
    found, absent, slow = {}, {}, []
    for atom in catalog():
        ci, flows, pnc = atom.ci_graph, atom.flow_set, atom.slot_costs.pnc
        for downlink in (False, True):
            start = time.perf_counter()
            if atom.id in ("VII", "IX"):
                absent[atom.id, downlink] = min_slots(
                    ci, flows, pnc - 1, allow_peripheral_downlink=downlink, budget=50_000_000)
            else:
                found[atom.id, downlink] = min_slots(
                    ci, flows, allow_peripheral_downlink=downlink, budget=50_000_000) == pnc
            if time.perf_counter() - start > 60:
                slow.append(atom.id)
    ok = all(found.values()) and all(v is None for v in absent.values()) and not slow
    verdict(2, ok, f"minimal for {sorted({a for a, _ in found})}, "
                   f"absent below cost for VII/IX={all(v is None for v in absent.values())}")


def test_criterion_03_square():
    net = LocalNetwork(np.array(SQUARE_POSITIONS), alpha=SQUARE_ALPHA)
    flows = potential_flows(net)
    found = identify(net, flows)
    counts = {cid: len(v) for cid, v in found.items() if v}
    c = demand_vector(flows, SQUARE_DEMAND)
    total = schedule(net, c, "pnc9").total_slots
    m = build_matrix(found, flows)
    D = np.hstack([m.D, np.eye(len(flows), dtype=int)])
    b = np.concatenate([m.costs, [NONNC_COST] * len(flows)])
    optimum = ilp_optimum(D, b, c)
    ok = counts == {"I": 2, "V": 4, "VI": 1} and total <= 9 and total == optimum
    verdict(3, ok, f"instances={counts}, slots={total}, ILP optimum={optimum:g}")


def test_criterion_04_mixed(mixed_net):
    flows = potential_flows(mixed_net)
    c = demand_vector(flows, MIXED_FLOWS)
    pnc9 = schedule(mixed_net, c, "pnc9").total_slots
    pnc_i = schedule(mixed_net, c, "pnc-i").total_slots
    verdict(4, (pnc9, pnc_i) == (10, 16), f"PNC-9={pnc9}, PNC-I={pnc_i}")


@pytest.mark.slow
def test_criterion_05_nonnc(cell_30_100, cell_30_1000, cell_10_100):
    cells = {"30/100": (cell_30_100, 100), "30/1000": (cell_30_1000, 1000),
             "10/100": (cell_10_100, 100)}
    bad = {name: int(np.sum(res.slots("nonnc") != 2 * k)) for name, (res, k) in cells.items()}
    rsd = max(res.metrics()["nonnc"].rsd for res, _ in cells.values())
    verdict(5, not any(bad.values()) and rsd == 0.0, f"trials off 2K per cell={bad}, RSD={rsd}")


@pytest.mark.slow
def test_criterion_06_scheme_means(cell_30_100):
    m = cell_30_100.metrics()
    means = {s: m[s].mean_ts for s in ("pnc9", "snc9", "pnc-twrc", "nonnc")}
    targets = {"pnc9": 103.2, "snc9": 148.3, "pnc-twrc": 183.1}
    within = {s: abs(means[s] - t) <= 0.10 * t for s, t in targets.items()}
    ordered = (means["pnc9"] < means["snc9"] <= means["pnc-twrc"] < means["nonnc"])
    trials = m["pnc9"].trials
    detail = ", ".join(f"{s}={v:.1f}" for s, v in means.items())
    verdict(6, all(within.values()) and ordered and trials == 100,
            f"{detail}; within 10%={within}; ordered={ordered}")


@pytest.mark.slow
def test_criterion_07_subsets(cell_30_100, cell_30_1000, cell_10_100):
    cells = {"30/100": cell_30_100, "30/1000": cell_30_1000, "10/100": cell_10_100}
    sub = {k: r.metrics()[SUBSET] for k, r in cells.items()}
    pair = {k: r.metrics()[PAIR].mean_degradation for k, r in cells.items()
            if k in ("30/100", "30/1000")}
    ok = (all(s.mean_degradation <= 5 and s.tail_gamma <= 0.08 for s in sub.values())
          and all(v <= 10 for v in pair.values()))
    detail = "; ".join(f"{k}: D={s.mean_degradation:.2f}% gamma={s.tail_gamma:.2f}"
                       for k, s in sub.items())
    verdict(7, ok, f"I&II&V {detail}; I&V D={ {k: round(v, 2) for k, v in pair.items()} }")


@pytest.mark.slow
def test_criterion_08_single_atoms(cell_10_100):
    m = cell_10_100.metrics()
    singles = {s: m[s].mean_degradation for s in SINGLES}
    pnc6 = m["pnc6"].mean_degradation
    short = {s: round(v, 1) for s, v in singles.items() if v < 10}
    ok = not short and pnc6 >= 20
    verdict(8, ok, f"single-atom D%={ {s: round(v, 1) for s, v in singles.items()} }, "
                   f"PNC-6={pnc6:.1f}%, below 10%: {short or 'none'}")


@pytest.mark.slow
def test_criterion_09_greedy(cell_30_100, cell_10_100):
    gaps = {(k, s): greedy_gap(r, s) for k, r in (("30/100", cell_30_100), ("10/100", cell_10_100))
            for s in ("pnc9", SUBSET)}
    ok = all(v <= (15 if s == "pnc9" else 12) for (_, s), v in gaps.items())
    verdict(9, ok, "greedy vs LP D%=" + ", ".join(f"{k} {s}={v:.2f}" for (k, s), v in gaps.items()))


def _random_frame(rng: random.Random):
    kind = rng.choice(("request", "demand", "assignment"))
    bssid = bytes(rng.randrange(256) for _ in range(6))
    fc = rng.randrange(1 << 16)
    if kind == "request":
        n = rng.randint(1, 64)
        sched = frozenset(i for i in range(n) if rng.random() < 0.3)
        return kind, n, mac.MultiPollRequest(n, sched, rng.randint(1, 255), fc, bssid)
    if kind == "demand":
        w = rng.randint(1, 8)
        return kind, w, mac.MultiPollDemand([rng.randrange(1 << 16) for _ in range(w)], fc, bssid)
    n, w = rng.randint(1, 8), rng.randint(1, 8)
    blocks = []
    for _ in range(n):
        entries = []
        for _ in range(w):
            if rng.random() < 0.2:
                entries.append(None)
                continue
            atom = rng.choice(catalog())
            cls = catalog().index(atom) + 1
            entries.append(mac.AtomRole(rng.randrange(256), cls,
                                        rng.randrange(atom.peripheral_count)))
        blocks.append(mac.PollingControl(rng.randrange(1 << 16), entries))
    return kind, n, mac.MultiPollAssignment(blocks, fc, bssid)


def _decode(kind, dim, raw):
    if kind == "request":
        return mac.decode_request(raw, dim)
    if kind == "demand":
        return mac.decode_demand(raw, dim)
    return mac.decode_assignment(raw, dim)


def test_criterion_10_mac():
    start = time.perf_counter()
    lengths = all(
        len(mac.encode_request(mac.MultiPollRequest(n))) == 13 + -(-n // 8)
        and all(len(mac.encode_assignment(mac.MultiPollAssignment(
            [mac.PollingControl(k, [None] * w) for k in range(n)]))) == 12 + (2 + 2 * w) * n
            and len(mac.encode_demand(mac.MultiPollDemand([0] * w))) == 12 + 2 * w
            for w in range(1, 9))
        for n in range(1, 65))
    h = mac.per_packet_overhead(6, 1)
    rng = random.Random(10)
    trips = detected = 0
    for _ in range(10_000):
        kind, dim, frame = _random_frame(rng)
        raw = mac.encode(frame)
        trips += _decode(kind, dim, raw) == frame
        buf = bytearray(raw)
        buf[rng.randrange(len(buf))] ^= rng.randint(1, 255)
        try:
            _decode(kind, dim, bytes(buf))
        except mac.FCSError:
            detected += 1
    elapsed = time.perf_counter() - start
    ok = lengths and 22 <= h <= 23 and trips == detected == 10_000 and elapsed < 10
    verdict(10, ok, f"lengths={lengths}, H(6,1)={h:.2f}, round trips={trips}, "
                    f"FCS catches={detected}, {elapsed:.1f}s")


def test_criterion_11_molecules():
    viii, iii = molecule("VIII"), molecule("III")
    twrc = get_atom("I").slot_costs.pnc
    served = all({f for s, d in m.twrc_pairs for f in ((s, d), (d, s))}
                 == set(m.forward) | set(m.reverse) for m in (viii, iii))
    ok = (served and viii.twrc_slots == viii.paired_slots == 6 == twrc * len(viii.twrc_pairs)
          and iii.twrc_slots == 6 < iii.paired_slots == 8)
    verdict(11, ok, f"VIII {viii.twrc_slots} vs {viii.paired_slots}, "
                    f"III {iii.twrc_slots} vs {iii.paired_slots}")


@pytest.mark.slow
def test_criterion_12_radius_sweep():
    config = ExperimentConfig(n_r=30, traffic="fixed:100", schemes=("pnc9",), **DESK)
    sweep = radius_sweep(config, [0.1, 0.5, 0.9])
    vals = np.array(list(sweep.means.values()))
    recomputed = (vals.max() - vals.min()) / vals.mean()
    single = radius_sweep(replace(config, n_networks=1, n_assignments=1), [0.5]).spread
    ok = sweep.spread <= 0.08 and np.isclose(recomputed, sweep.spread) and single == 0
    means = {r: round(v, 1) for r, v in sweep.means.items()}
    verdict(12, ok, f"means={means}, spread={100 * sweep.spread:.2f}%")


@pytest.mark.slow
def test_per_trial_ordering(cell_30_100, cell_10_100):
    for res, subsets in ((cell_30_100, (SUBSET, PAIR, "pnc-twrc")), (cell_10_100, SINGLES)):
        pnc9, nonnc = res.slots("pnc9"), res.slots("nonnc")
        for s in subsets:
            assert np.all(pnc9 <= res.slots(s)) and np.all(res.slots(s) <= nonnc)
