"""Turn traffic demands into slot schedules.

The LP route covers demand with identified atom instances plus one
store-and-forward column per flow (two slots, one packet), rounds the
fractional airtime up and trims it. The greedy route walks instances in a
fixed priority order. Either way the result can be expanded into a
slot-by-slot roster and replayed symbolically.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from . import lp, patterns
from .atoms import RELAY, ROMAN, Scheme, catalog, get_atom
from .identification import AtomInstance, identify
from .topology import LocalNetwork, ci_check, potential_flows

NONNC_COST = 2
GREEDY_PRIORITY = ("VI", "IX", "I", "II", "V", "VIII", "III", "IV", "VII")
_RANK = {cid: i for i, cid in enumerate(GREEDY_PRIORITY)}


@dataclass(frozen=True)
class SchemeConfig:
    name: str
    classes: tuple[str, ...]
    mode: Scheme = Scheme.PNC

    @property
    def uses_atoms(self) -> bool:
        return self.mode is not Scheme.NONNC and bool(self.classes)


_NAMED = {
    "pnc9": ROMAN,
    "pnc-twrc": ("I",),
    "pnc6": ("III", "IV", "VI", "VII", "VIII", "IX"),
}


def parse_scheme(name) -> SchemeConfig:
    """``pnc9``, ``pnc6``, ``snc9``, ``nonnc`` or ``pnc-`` followed by
    numerals joined with ``-`` or ``&`` (``pnc-i-ii-v``, ``pnc-I&V``)."""
    if isinstance(name, SchemeConfig):
        return name
    key = str(name).strip().lower()
    if key in ("nonnc", "non-nc"):
        return SchemeConfig("nonnc", (), Scheme.NONNC)
    if key == "snc9":
        return SchemeConfig("snc9", ROMAN, Scheme.SNC)
    if key in _NAMED:
        return SchemeConfig(key, _NAMED[key])
    m = re.fullmatch(r"(pnc|snc)-([ivx&\-]+)", key)
    if not m:
        raise ValueError(f"unknown scheme {name!r}")
    ids = [get_atom(tok).id for tok in re.split(r"[-&]", m.group(2)) if tok]
    ordered = tuple(a.id for a in catalog() if a.id in ids)
    return SchemeConfig(key, ordered, Scheme(m.group(1)))


@dataclass(frozen=True)
class Execution:
    """``count`` back-to-back runs of one instance, or of the two-slot relay
    forward for a single flow when ``instance`` is None."""

    instance: AtomInstance | None
    count: int
    flow: int | None = None

    @property
    def cost(self) -> int:
        return NONNC_COST if self.instance is None else self.instance.cost

    @property
    def flows(self) -> tuple[int, ...]:
        return (self.flow,) if self.instance is None else self.instance.flows

    @property
    def label(self) -> str:
        return "non-NC" if self.instance is None else self.instance.class_id


@dataclass(frozen=True)
class Schedule:
    executions: tuple[Execution, ...]
    flows: tuple[tuple[int, int], ...]
    demand: tuple[int, ...]
    lp_objective: float | None = None
    scheme: str = ""

    @property
    def total_slots(self) -> int:
        return sum(e.count * e.cost for e in self.executions)

    def coverage(self) -> np.ndarray:
        served = np.zeros(len(self.flows), dtype=np.int64)
        for e in self.executions:
            for f in e.flows:
                served[f] += e.count
        return served

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "total_slots": self.total_slots,
            "lp_objective": self.lp_objective,
            "executions": [
                {"class": e.label, "count": e.count, "cost": e.cost,
                 "flows": [list(self.flows[f]) for f in e.flows],
                 "nodes": None if e.instance is None else e.instance.node_map()}
                for e in self.executions
            ],
        }


def _demand_vector(c, n_flows: int) -> np.ndarray:
    arr = np.asarray(c)
    if arr.shape != (n_flows,):
        raise ValueError(f"demand vector must have length {n_flows}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr != np.round(arr)):
        raise ValueError("demands must be non-negative integers")
    return arr.astype(np.int64)


def _instances_for(net, flows, config: SchemeConfig, instances):
    if not config.uses_atoms:
        return []
    if instances is None:
        instances = identify(net, flows, config.classes, config.mode)
    if isinstance(instances, Mapping):
        instances = [i for cid in config.classes for i in instances.get(cid, ())]
    return [i for i in instances if i.class_id in config.classes and i.scheme is config.mode]


def _columns(instances, demand: np.ndarray):
    """Instance columns worth keeping for this demand, one per distinct support.

    A column whose cost reaches the store-and-forward price of the demanded
    flows it serves can never beat the fallback columns and is dropped.
    """
    best: dict[tuple[int, ...], AtomInstance] = {}
    for inst in instances:
        support = tuple(sorted(f for f in set(inst.flows) if demand[f] > 0))
        if not support or inst.cost >= NONNC_COST * len(support):
            continue
        cur = best.get(support)
        if cur is None or inst.cost < cur.cost:
            best[support] = inst
    return best


def schedule(net: LocalNetwork, c, scheme="pnc9", *, instances=None,
             solver: str = "simplex", greedy: bool = False, flows=None) -> Schedule:
    """Minimum-airtime schedule for demand ``c`` (indexed by potential flows).

    ``instances`` may carry a previous :func:`identify` result so repeated
    calls on one network skip identification.
    """
    config = parse_scheme(scheme)
    flows = tuple(potential_flows(net) if flows is None else flows)
    demand = _demand_vector(c, len(flows))
    pool = _instances_for(net, flows, config, instances)
    if greedy:
        return schedule_greedy(pool, demand, flows=flows, scheme=config.name)
    cols = _columns(pool, demand)
    rows = np.flatnonzero(demand > 0)
    row_of = {int(f): i for i, f in enumerate(rows)}
    chosen = list(cols.values())
    n_inst = len(chosen)
    r_idx, c_idx = [], []
    for j, inst in enumerate(chosen):
        for f in set(inst.flows):
            if f in row_of:
                r_idx.append(row_of[f])
                c_idx.append(j)
    r_idx += range(len(rows))
    c_idx += range(n_inst, n_inst + len(rows))
    D = sparse.csc_matrix((np.ones(len(r_idx)), (r_idx, c_idx)),
                          shape=(len(rows), n_inst + len(rows)))
    b = np.array([inst.cost for inst in chosen] + [NONNC_COST] * len(rows), dtype=float)
    sub_c = demand[rows].astype(float)
    res = lp.solve_lp(D, b, sub_c, solver=solver)
    if not res.ok:  # pragma: no cover - fallback columns make this unreachable
        raise lp.LPInfeasible("demand cannot be covered")
    y = lp.round_iteratively(D, b, sub_c, solver=solver, y_frac=res.y)
    execs = [Execution(chosen[j], int(y[j])) for j in range(n_inst) if y[j]]
    execs.sort(key=lambda e: _RANK[e.instance.class_id])
    execs += [Execution(None, int(y[n_inst + i]), int(f)) for i, f in enumerate(rows)
              if y[n_inst + i]]
    return Schedule(tuple(execs), flows, tuple(int(v) for v in demand), res.objective,
                    config.name)


def schedule_greedy(instances, c, *, flows=None, scheme: str = "greedy") -> Schedule:
    """Priority-order heuristic over fully occupied instances.

    Classes are visited in :data:`GREEDY_PRIORITY` order and instances within a
    class by position. An instance is used only while every flow it serves
    still has packets, and then as many times as its least loaded flow allows.
    Whatever is left goes store-and-forward.
    """
    if isinstance(instances, Mapping):
        instances = [i for v in instances.values() for i in v]
    remaining = np.asarray(c, dtype=np.int64).copy()
    if flows is None:
        flows = tuple((i, i) for i in range(len(remaining)))
    ordered = sorted(enumerate(instances), key=lambda p: (_RANK[p[1].class_id], p[0]))
    execs = []
    for _, inst in ordered:
        fl = list(set(inst.flows))
        k = int(remaining[fl].min())
        if k > 0:
            execs.append(Execution(inst, k))
            remaining[fl] -= k
    execs += [Execution(None, int(r), f) for f, r in enumerate(remaining) if r > 0]
    return Schedule(tuple(execs), tuple(flows), tuple(int(v) for v in c), None, scheme)


# --- roster -----------------------------------------------------------------

@dataclass(frozen=True)
class Packet:
    flow: int
    seq: int | None  # None marks padding on a flow with nothing left to send

    def __str__(self):
        return f"f{self.flow}#{'pad' if self.seq is None else self.seq}"


@dataclass(frozen=True)
class RosterSlot:
    time: int  # 1-based
    execution: int
    transmit: dict
    receive: dict


@dataclass(frozen=True)
class PacketAssignment:
    packet: Packet
    source: int
    start_time: int
    class_id: str | None  # None for store-and-forward
    role: int


@dataclass
class Roster:
    slots: list[RosterSlot] = field(default_factory=list)
    assignments: list[PacketAssignment] = field(default_factory=list)
    run_starts: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.slots)

    def boundaries(self) -> list[int]:
        """Last slot of every run except the final one."""
        return [s - 1 for s in self.run_starts[1:]]


def _expr(v: int, packets: Sequence[Packet]) -> tuple[Packet, ...]:
    return tuple(p for k, p in enumerate(packets) if v >> k & 1)


def expand(sched: Schedule) -> Roster:
    """Lay executions end to end, one instance run at a time."""
    roster = Roster()
    sent = defaultdict(int)
    t = 1
    for idx, e in enumerate(sched.executions):
        for _ in range(e.count):
            roster.run_starts.append(t)
            packets = []
            for f in e.flows:
                if sent[f] < sched.demand[f]:
                    packets.append(Packet(f, sent[f]))
                    sent[f] += 1
                else:
                    packets.append(Packet(f, None))
            if e.instance is None:
                (p,) = packets
                src, dst = sched.flows[p.flow]
                roster.slots.append(RosterSlot(t, idx, {src: (p,)}, {RELAY: (p,)}))
                roster.slots.append(RosterSlot(t + 1, idx, {RELAY: (p,)}, {dst: (p,)}))
                roster.assignments.append(PacketAssignment(p, src, t, None, 0))
                t += 2
                continue
            atom = e.instance.atom
            nodes = e.instance.node_map()
            nodes[RELAY] = RELAY
            for slot in atom.pattern_for(e.instance.scheme):
                roster.slots.append(RosterSlot(
                    t, idx,
                    {nodes[k]: _expr(v, packets) for k, v in slot.transmissions.items()},
                    {nodes[k]: _expr(v, packets) for k, v in slot.receptions.items()}))
                t += 1
            for k, (s, _) in enumerate(atom.flow_set):
                roster.assignments.append(PacketAssignment(
                    packets[k], nodes[s], roster.run_starts[-1], atom.id, atom.role_index(s)))
    return roster


def replay(sched: Schedule, net: LocalNetwork) -> bool:
    """Check every run against geometry and symbolic decoding.

    Each atom run must satisfy its class requirements on ``net`` and its
    pattern, relabelled onto the actual nodes, must let every destination
    decode. Coverage of the demand is checked last.
    """
    for e in sched.executions:
        if e.instance is None:
            s, d = sched.flows[e.flow]
            if net.distance(s, d) <= net.tx_range:
                return False
            continue
        inst = e.instance
        atom = inst.atom
        if not ci_check(net, atom, inst.node_map(), inst.scheme):
            return False
        names = {x: str(v) for x, v in inst.node_map().items()}
        ci = atom.ci_for(inst.scheme).relabel(names)
        fs = atom.flow_set.relabel(names)
        if [sched.flows[f] for f in inst.flows] != [(int(s), int(d)) for s, d in fs]:
            return False
        report = patterns.simulate(atom.pattern_for(inst.scheme).relabel(names), ci, fs)
        if not (report.valid and report.all_decoded):
            return False
    return bool(np.all(sched.coverage() >= np.asarray(sched.demand)))
