"""Monte Carlo comparison of scheduling schemes on random local networks.

Every trial draws a network and a traffic assignment from seeds derived from
``(master seed, network index, assignment index)``, schedules the same
demand under every requested scheme, and records slot counts. Aggregates
are mean slots, relative standard deviation, mean degradation against the
all-atom LP schedule (``pnc9``) and the share of trials degraded by more than
10 %.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .atoms import Scheme
from .identification import identify
from .scheduler import parse_scheme, schedule
from .topology import generate, potential_flows

log = logging.getLogger(__name__)

BENCHMARK = "pnc9"
TAIL_THRESHOLD = 10.0
CSV_COLUMNS = ("network_id", "assignment_id", "scheme", "slots", "degradation_vs_pnc9")


def degradation(t_scheme: float, t_benchmark: float) -> float:
    """Throughput loss of a scheme against the benchmark, in percent."""
    if t_scheme <= 0 or t_benchmark <= 0:
        raise ValueError("slot counts must be positive")
    return (t_scheme - t_benchmark) / t_scheme * 100.0


@dataclass(frozen=True)
class Traffic:
    mode: str  # "fixed" or "saturated"
    amount: int  # K for fixed, W for saturated

    @classmethod
    def parse(cls, text) -> Traffic:
        if isinstance(text, Traffic):
            return text
        m = re.fullmatch(r"\s*(fixed|saturated)\s*:\s*(\d+)\s*", str(text))
        if not m or int(m.group(2)) < 1:
            raise ValueError(f"traffic must look like fixed:K or saturated:W, got {text!r}")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self):
        return f"{self.mode}:{self.amount}"

    def draw(self, flows: Sequence[tuple[int, int]], n_r: int, rng: np.random.Generator) -> np.ndarray:
        F = len(flows)
        if self.mode == "fixed":
            return np.bincount(rng.integers(0, F, self.amount), minlength=F)
        c = np.zeros(F, dtype=np.int64)
        outgoing: dict[int, list[int]] = {}
        for i, (s, _) in enumerate(flows):
            outgoing.setdefault(s, []).append(i)
        # nodes without potential flows cannot send through the relay
        for node in range(n_r):
            options = outgoing.get(node)
            if options:
                np.add.at(c, rng.choice(options, size=self.amount), 1)
        return c


@dataclass(frozen=True)
class ExperimentConfig:
    n_r: int = 30
    traffic: Traffic = Traffic("fixed", 100)
    schemes: tuple[str, ...] = ("pnc9", "snc9", "pnc-i", "nonnc")
    n_networks: int = 10
    n_assignments: int = 10
    r_inner: float = 0.5
    seed: int = 0
    solver: str = "auto"
    alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "traffic", Traffic.parse(self.traffic))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.n_networks < 1 or self.n_assignments < 1:
            raise ValueError("need at least one network and one assignment")
        for name in self.schemes:
            _split(name)


def _split(name: str) -> tuple[str, bool]:
    """``"pnc9:greedy"`` -> (``"pnc9"``, True)."""
    base, _, tag = name.partition(":")
    if tag not in ("", "greedy"):
        raise ValueError(f"unknown scheme suffix in {name!r}")
    parse_scheme(base)
    return base, tag == "greedy"


@dataclass
class Metrics:
    mean_ts: float
    rsd: float
    mean_degradation: float
    tail_gamma: float
    trials: int

    @property
    def throughput_scale(self) -> float:
        return 1.0 / self.mean_ts if self.mean_ts else float("nan")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def slots(self, scheme: str) -> np.ndarray:
        return np.array([r["slots"] for r in self.rows if r["scheme"] == scheme], dtype=float)

    def degradations(self, scheme: str) -> np.ndarray:
        return np.array([r["degradation_vs_pnc9"] for r in self.rows if r["scheme"] == scheme])

    def metrics(self) -> dict[str, Metrics]:
        out = {}
        for name in self.config.schemes:
            ts, deg = self.slots(name), self.degradations(name)
            if not ts.size:
                continue
            mean = float(ts.mean())
            out[name] = Metrics(
                mean_ts=mean,
                rsd=float(ts.std() / mean) if mean else 0.0,
                mean_degradation=float(deg.mean()),
                tail_gamma=float(np.mean(deg > TAIL_THRESHOLD)),
                trials=int(ts.size),
            )
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(self.rows)

    def summary(self) -> dict:
        cfg = asdict(self.config)
        cfg["traffic"] = str(self.config.traffic)
        return {"config": cfg,
                "metrics": {k: asdict(v) for k, v in self.metrics().items()},
                "failures": self.failures}

    def write_summary(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2))


def _seed(config: ExperimentConfig, *parts: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((config.seed,) + parts)


def network_for(config: ExperimentConfig, net_id: int, r_inner: float | None = None):
    kwargs = {} if config.alpha is None else {"alpha": config.alpha}
    r_in = config.r_inner if r_inner is None else r_inner
    return generate(config.n_r, r_in, 1.0, _seed(config, 0, net_id), **kwargs)


def _network_trials(config: ExperimentConfig, net_id: int, r_inner: float | None = None):
    net = network_for(config, net_id, r_inner)
    flows = potential_flows(net)
    wanted = [_split(n) for n in config.schemes]
    if BENCHMARK not in [b for b, g in wanted if not g]:
        wanted.append((BENCHMARK, False))
    modes = {parse_scheme(b).mode for b, _ in wanted}
    pools = {m: identify(net, flows, None, m) for m in modes if m is not Scheme.NONNC}
    rows, failures = [], []
    for a_id in range(config.n_assignments):
        rng = np.random.default_rng(_seed(config, 1, net_id, a_id))
        trial = {"network_id": net_id, "assignment_id": a_id}
        if not flows:
            failures.append({**trial, "reason": "network has no potential flows"})
            continue
        c = config.traffic.draw(flows, config.n_r, rng)
        slots = {}
        try:
            for base, greedy in wanted:
                mode = parse_scheme(base).mode
                sched = schedule(net, c, base, instances=pools.get(mode), solver=config.solver,
                                 greedy=greedy, flows=flows)
                slots[base + (":greedy" if greedy else "")] = sched.total_slots
        except Exception as exc:  # noqa: BLE001 - one bad trial must not end the run
            log.warning("trial %s/%s aborted: %s", net_id, a_id, exc)
            failures.append({**trial, "reason": repr(exc)})
            continue
        bench = slots[BENCHMARK]
        k = int(c.sum())
        for name in config.schemes:
            t = slots[name]
            rows.append({**trial, "scheme": name, "slots": t, "volume": k,
                         "degradation_vs_pnc9": degradation(t, bench) if t and bench else 0.0})
    return rows, failures


def run(config: ExperimentConfig, *, workers: int = 1, r_inner: float | None = None) -> ExperimentResult:
    """Run every (network, assignment) trial; output order is fixed by index."""
    ids = range(config.n_networks)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_network_trials, [config] * len(ids), ids, [r_inner] * len(ids)))
    else:
        parts = [_network_trials(config, i, r_inner) for i in ids]
    result = ExperimentResult(config)
    for rows, failures in parts:
        result.rows.extend(rows)
        result.failures.extend(failures)
    return result


@dataclass
class SweepResult:
    means: dict[float, float]
    results: dict[float, ExperimentResult]

    @property
    def spread(self) -> float:
        vals = np.array(list(self.means.values()))
        return float((vals.max() - vals.min()) / vals.mean()) if vals.size else 0.0


def radius_sweep(config: ExperimentConfig, radii=(0.1, 0.3, 0.5, 0.7, 0.9), *,
                 workers: int = 1) -> SweepResult:
    """Mean PNC-9 slots for each inner radius, all else equal."""
    cfg = ExperimentConfig(**{**asdict(config), "traffic": config.traffic, "schemes": (BENCHMARK,)})
    results = {float(r): run(cfg, workers=workers, r_inner=float(r)) for r in radii}
    means = {r: float(res.slots(BENCHMARK).mean()) for r, res in results.items()}
    return SweepResult(means, results)
