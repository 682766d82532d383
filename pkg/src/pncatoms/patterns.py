"""Symbolic packet-flow simulation over GF(2) and minimum-slot search.

Every node keeps the span of the XOR equations it has received. A receiver
listening in a slot obtains the XOR of the transmitters it is connected to,
provided at most two of them are connected and every other transmitter is
covered by an interference-free guard for that reception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

from . import gf2
from .atoms import AtomClass, CIGraph, FlowSet, Scheme, Slot, TransmissionPattern

HALF_DUPLEX = "half-duplex"
TOO_MANY = "too-many-connected-transmitters"
UNGUARDED = "unguarded-interferer"
NOT_IN_SPAN = "expression-not-in-span"
MISMATCH = "reception-mismatch"


@dataclass(frozen=True)
class Violation:
    slot: int
    node: str
    reason: str


@dataclass
class ValidityReport:
    violations: list[Violation]
    spans: dict[str, gf2.Span]
    decoded: dict[tuple[str, str], bool] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def all_decoded(self) -> bool:
        return all(self.decoded.values())

    def to_dict(self, names=None) -> dict:
        fmt = (lambda v: gf2.format_expression(v, names)) if names else (lambda v: v)
        return {
            "valid": self.valid,
            "violations": [{"slot": v.slot, "node": v.node, "reason": v.reason}
                           for v in self.violations],
            "spans": {k: [fmt(b) for b in s] for k, s in self.spans.items()},
            "decoded": {f"{s}>{d}": ok for (s, d), ok in self.decoded.items()},
        }


def initial_spans(ci: CIGraph, flows: FlowSet) -> dict[str, gf2.Span]:
    return {n: gf2.span_of([flows.native(n)]) for n in ci.labels}


def receivers_hearing(ci: CIGraph, transmitters, node: str):
    """Split ``transmitters`` for listener ``node`` into (connected, unguarded)."""
    heard = [t for t in transmitters if ci.connected(t, node)]
    unguarded = [t for t in transmitters
                 if t not in heard and not ci.guarded(t, node, heard)]
    return heard, unguarded


def simulate(pattern: TransmissionPattern, ci: CIGraph, flows: FlowSet) -> ValidityReport:
    labels = set(ci.labels)
    for s, d in flows:
        if s not in labels or d not in labels:
            raise ValueError(f"flow {s}>{d} uses a label outside the CI-graph")
    spans = initial_spans(ci, flows)
    violations = []
    for i, slot in enumerate(pattern):
        unknown = (set(slot.transmissions) | set(slot.receptions)) - labels
        if unknown:
            raise ValueError(f"slot {i} references unknown labels {sorted(unknown)}")
        tx = slot.transmissions
        for node, expr in sorted(tx.items()):
            if expr == 0 or not gf2.contains(spans[node], expr):
                violations.append(Violation(i, node, NOT_IN_SPAN))
        gained = {}
        for node, expr in sorted(slot.receptions.items()):
            if node in tx:
                violations.append(Violation(i, node, HALF_DUPLEX))
                continue
            heard, unguarded = receivers_hearing(ci, tx, node)
            if unguarded:
                violations.append(Violation(i, node, UNGUARDED))
            elif len(heard) > 2:
                violations.append(Violation(i, node, TOO_MANY))
            elif not heard or gf2.xor_all(tx[t] for t in heard) != expr:
                violations.append(Violation(i, node, MISMATCH))
            else:
                gained[node] = expr
        for node, expr in gained.items():
            spans[node] = gf2.add(spans[node], expr)
    decoded = {
        (s, d): gf2.contains(spans[d], 1 << f) for f, (s, d) in enumerate(flows)
    }
    return ValidityReport(violations, spans, decoded)


def verify(atom: AtomClass, scheme=Scheme.PNC) -> bool:
    report = simulate(atom.pattern_for(scheme), atom.ci_for(scheme), atom.flow_set)
    return report.valid and report.all_decoded


# --- lower bounds -------------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundConditions:
    prop_a1_bound: int
    prop_a2_applies: bool
    unheard_by_other_destination: bool
    no_uplink_information: bool


def _hop_distance(ci: CIGraph, src: str, dst: str) -> float:
    # Peripheral-only hops; the relay stays silent during uplink.
    frontier, seen, hops = {src}, {src}, 0
    while frontier:
        if dst in frontier:
            return hops
        frontier = {v for u in frontier for v in ci.neighbours(u)} - seen
        seen |= frontier
        hops += 1
    return math.inf


def lower_bound_conditions(atom: AtomClass) -> LowerBoundConditions:
    ci, flows = atom.ci_graph, atom.flow_set
    sources = flows.sources
    uplink = math.ceil(len(sources) / 2)
    destinations = {d for _, d in flows}
    cond1 = True
    for s in sources:
        own = {d for src, d in flows if src == s}
        if any(ci.connected(s, d) for d in own):
            cond1 = False
        # the witness destination must lack the source's packet, so not the source itself
        others = destinations - own - {s}
        if not any(not ci.connected(s, d) for d in others):
            cond1 = False
    cond2 = all(_hop_distance(ci, s, d) > uplink for s, d in flows)
    return LowerBoundConditions(uplink + 1, cond1 and cond2, cond1, cond2)


# --- exhaustive search -----------------------------------------------------------

class SearchInconclusive(RuntimeError):
    """Raised when the node-expansion budget runs out before a verdict."""


class _Search:
    def __init__(self, ci: CIGraph, flows: FlowSet, allow_peripheral_downlink: bool, budget: int):
        self.ci = ci
        self.flows = flows
        self.labels = ci.labels  # relay is index 0
        n = len(self.labels)
        self.n = n
        self.native = [flows.native(x) for x in self.labels]
        self.targets = [list(flows.targets(x)) for x in self.labels]
        self.allow_pd = allow_peripheral_downlink
        self.budget = budget
        self.expanded = 0
        self.failed: dict[tuple, int] = {}
        self._hear_cache: dict[tuple, list] = {}

    def hearing(self, tx: tuple[int, ...]):
        """For a transmitter set, the listeners and which transmitters they hear."""
        out = self._hear_cache.get(tx)
        if out is None:
            names = [self.labels[t] for t in tx]
            out = []
            for r in range(self.n):
                if r in tx:
                    continue
                heard, unguarded = receivers_hearing(self.ci, names, self.labels[r])
                if unguarded or not 1 <= len(heard) <= 2:
                    continue
                out.append((r, tuple(tx[names.index(h)] for h in heard)))
            self._hear_cache[tx] = out
        return out

    def done(self, state) -> bool:
        return all(gf2.contains(state[x], t) for x in range(self.n) for t in self.targets[x])

    def pending(self, state) -> set[int]:
        return {x for x in range(self.n)
                if any(not gf2.contains(state[x], t) for t in self.targets[x])}

    def fresh_sources(self, state) -> set[int]:
        """Sources holding a native packet that no other node has seen yet."""
        involved = [gf2.support(s) for s in state]
        out = set()
        for x in range(self.n):
            if not self.native[x]:
                continue
            others = 0
            for y in range(self.n):
                if y != x:
                    others |= involved[y]
            if self.native[x] & ~others:
                out.add(x)
        return out

    @staticmethod
    def _bound(n_fresh: int, finished: bool) -> int:
        # each fresh source must still transmit (two per slot at most), and its
        # destination cannot hear it directly, so one more slot follows
        if n_fresh:
            return (n_fresh + 1) // 2 + 1
        return 0 if finished else 1

    def transmitter_sets(self, state):
        live = [x for x in range(1, self.n) if state[x]]
        for i, p in enumerate(live):
            yield (p,)
            for q in live[i + 1:]:
                yield (p, q)
        if state[0]:
            yield (0,)
            if self.allow_pd:
                for p in live:
                    yield (0, p)

    def successors(self, state, remaining):
        fresh = self.fresh_sources(state)
        pending = self.pending(state)
        for tx in self.transmitter_sets(state):
            still_fresh = len(fresh) - sum(1 for t in tx if t in fresh)
            if still_fresh and self._bound(still_fresh, False) > remaining - 1:
                continue
            listeners = self.hearing(tx)
            if not listeners:
                continue
            if remaining == 1 and not pending <= {r for r, _ in listeners}:
                continue
            for exprs in product(*(gf2.elements(state[t]) for t in tx)):
                sent = dict(zip(tx, exprs))
                new = list(state)
                rx = {}
                for r, heard in listeners:
                    v = 0
                    for h in heard:
                        v ^= sent[h]
                    if v and not gf2.contains(state[r], v):
                        new[r] = gf2.add(new[r], v)
                        rx[r] = v
                if rx:
                    yield tuple(new), sent, rx

    def dfs(self, state, remaining):
        if self.done(state):
            return []
        if self._bound(len(self.fresh_sources(state)), False) > remaining:
            return None
        if self.failed.get(state, -1) >= remaining:
            return None
        self.expanded += 1
        if self.expanded > self.budget:
            raise SearchInconclusive(f"search budget of {self.budget} expansions exhausted")
        for nxt, sent, rx in self.successors(state, remaining):
            rest = self.dfs(nxt, remaining - 1)
            if rest is not None:
                return [(sent, rx)] + rest
        self.failed[state] = max(self.failed.get(state, -1), remaining)
        return None

    def to_pattern(self, steps) -> TransmissionPattern:
        lab = self.labels
        return TransmissionPattern(tuple(
            Slot({lab[t]: v for t, v in sent.items()}, {lab[r]: v for r, v in rx.items()})
            for sent, rx in steps
        ))


def find_pattern(ci: CIGraph, flows: FlowSet, slots: int, *,
                 allow_peripheral_downlink: bool = False,
                 budget: int = 2_000_000) -> TransmissionPattern | None:
    """A fully decoding pattern of at most ``slots`` slots, or None if none exists."""
    search = _Search(ci, flows, allow_peripheral_downlink, budget)
    start = tuple(gf2.span_of([v]) for v in search.native)
    steps = search.dfs(start, slots)
    return None if steps is None else search.to_pattern(steps)


def min_slots(ci: CIGraph, flows: FlowSet, max_slots: int = 8, *,
              allow_peripheral_downlink: bool = False,
              budget: int = 2_000_000) -> int | None:
    """Smallest slot count <= ``max_slots`` admitting a decoding pattern.

    Returns None when no pattern fits; raises :class:`SearchInconclusive` if the
    expansion budget is exhausted first.
    """
    if max_slots > 8:
        raise ValueError("max_slots must be at most 8")
    if len(ci.peripherals) > 6:
        raise ValueError("at most six peripherals are supported")
    search = _Search(ci, flows, allow_peripheral_downlink, budget)
    start = tuple(gf2.span_of([v]) for v in search.native)
    lower = max(1, math.ceil(len(flows.sources) / 2) + 1) if len(flows) else 0
    if lower == 0:
        return 0
    for k in range(lower, max_slots + 1):
        if search.dfs(start, k) is not None:
            return k
    return None
