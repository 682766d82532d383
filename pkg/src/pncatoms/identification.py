"""Find atom instances embedded in a local network and build the incidence
matrix of flows against instances.

Matching works on nodes rather than flow tuples: template labels are placed
one at a time onto peripherals, and each placement is filtered by the
connectivity and out-of-range requirements towards labels already placed.
Interference-free requirements are checked as soon as their three nodes are
known. Results are identical to brute force over ordered flow tuples.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from .atoms import RELAY, AtomClass, Scheme, catalog, get_atom
from .topology import LocalNetwork, potential_flows


@dataclass(frozen=True)
class AtomInstance:
    class_id: str
    flows: tuple[int, ...]  # potential-flow index per template flow
    nodes: tuple[int, ...]  # node index per template peripheral label
    scheme: Scheme = Scheme.PNC

    @cached_property
    def atom(self) -> AtomClass:
        return get_atom(self.class_id)

    @cached_property
    def cost(self) -> int:
        return self.atom.slot_costs[self.scheme]

    @property
    def assignment(self) -> dict[int, int]:
        return dict(enumerate(self.flows))

    def node_map(self) -> dict[str, int]:
        return dict(zip(self.atom.ci_graph.peripherals, self.nodes))

    def to_dict(self) -> dict:
        return {"class": self.class_id, "scheme": self.scheme.value,
                "flows": list(self.flows), "nodes": dict(self.node_map())}


@dataclass(frozen=True, eq=False)
class IncidenceMatrix:
    D: np.ndarray
    costs: np.ndarray
    instances: tuple[AtomInstance, ...]
    flows: tuple[tuple[int, int], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.D.shape


def _bits(idx: Iterable[int]) -> int:
    out = 0
    for i in idx:
        out |= 1 << int(i)
    return out


def _permute_bits(v: int, perm: Sequence[int]) -> int:
    out = 0
    for i, j in enumerate(perm):
        if v >> i & 1:
            out |= 1 << j
    return out


@lru_cache(maxsize=None)
def automorphisms(class_id: str, scheme=Scheme.PNC) -> tuple[tuple[int, ...], ...]:
    """Flow permutations induced by label permutations that fix the class.

    A label permutation qualifies when it maps the requirement graph, the
    flow set and the transmission pattern (up to slot order) onto themselves.
    Entry ``k`` of a returned tuple is the template flow that flow ``k`` goes to.
    """
    atom = get_atom(class_id)
    scheme = Scheme(scheme)
    ci = atom.ci_for(scheme)
    flows = list(atom.flow_set)
    pattern = atom.pattern_for(scheme)
    base_slots = Counter(s.key() for s in pattern)
    i_edges = set(ci.i_edges)
    out = []
    for perm in permutations(ci.peripherals):
        m = dict(zip(ci.peripherals, perm))
        moved = ci.relabel(m)
        if moved.c_edges != ci.c_edges or set(moved.i_edges) != i_edges:
            continue
        try:
            fperm = tuple(flows.index((m[s], m[d])) for s, d in flows)
        except ValueError:
            continue
        relabelled = pattern.relabel(m, lambda v: _permute_bits(v, fperm))
        if Counter(s.key() for s in relabelled) == base_slots:
            out.append(fperm)
    return tuple(out)


def _canonical(flow_idx: tuple[int, ...], autos) -> bool:
    for fperm in autos:
        image = [0] * len(flow_idx)
        for k, j in enumerate(fperm):
            image[j] = flow_idx[k]
        if tuple(image) < flow_idx:
            return False
    return True


def _label_order(atom: AtomClass, ci) -> list[str]:
    """Place the most constrained labels first."""
    labels = list(ci.peripherals)
    links = {x: set() for x in labels}
    for e in ci.c_edges:
        a, b = tuple(e)
        links[a].add(b)
        links[b].add(a)
    for s, d in atom.flow_set:
        links[s].add(d)
        links[d].add(s)
    order = [max(labels, key=lambda x: (len(links[x]), -labels.index(x)))]
    while len(order) < len(labels):
        rest = [x for x in labels if x not in order]
        order.append(max(rest, key=lambda x: (len(links[x] & set(order)), len(links[x]),
                                              -labels.index(x))))
    return order


class _Matcher:
    def __init__(self, net: LocalNetwork, flow_index: dict[tuple[int, int], int]):
        self.net = net
        n = len(net)
        self.n = n
        self.flow_index = flow_index
        adj = net.adjacency
        self.near = [_bits(np.nonzero(adj[u])[0]) for u in range(n)]
        self.far_flow = [0] * n  # v with (u, v) a usable flow
        self.far_flow_in = [0] * n  # v with (v, u) a usable flow
        for u, v in flow_index:
            self.far_flow[u] |= 1 << v
            self.far_flow_in[v] |= 1 << u
        self.dist = net.distances
        self.radius = np.hypot(net.positions[:, 0], net.positions[:, 1])

    def _length(self, a: int, b: int) -> float:
        if a < 0:
            return float(self.radius[b])
        if b < 0:
            return float(self.radius[a])
        return float(self.dist[a, b])

    def match(self, atom: AtomClass, scheme: Scheme):
        ci = atom.ci_for(scheme)
        order = _label_order(atom, ci)
        pos = {x: i for i, x in enumerate(order)}
        # per label: constraints towards earlier labels
        near_of = {x: [] for x in order}
        out_of = {x: [] for x in order}  # earlier y with flow (y, x)
        in_of = {x: [] for x in order}  # earlier y with flow (x, y)
        for e in ci.c_edges:
            a, b = sorted(e, key=pos.get)
            near_of[b].append(a)
        for s, d in atom.flow_set:
            if pos[s] < pos[d]:
                out_of[d].append(s)
            else:
                in_of[s].append(d)
        checks = {x: [] for x in order}
        for ie in ci.i_edges:
            involved = [ie.interferer, ie.receiver] + [t for t in ie.link if t != RELAY]
            checks[max(involved, key=pos.get)].append(ie)
        alpha = self.net.alpha
        full = (1 << self.n) - 1
        flow_keys = list(atom.flow_set)
        m: dict[str, int] = {RELAY: -1}

        def rec(k: int, used: int):
            if k == len(order):
                yield dict(m)
                return
            x = order[k]
            cand = full & ~used
            for y in near_of[x]:
                cand &= self.near[m[y]]
            for y in out_of[x]:
                cand &= self.far_flow[m[y]]
            for y in in_of[x]:
                cand &= self.far_flow_in[m[y]]
            while cand:
                low = cand & -cand
                v = low.bit_length() - 1
                cand ^= low
                m[x] = v
                ok = True
                for ie in checks[x]:
                    link = self._length(m[ie.link[0]], m[ie.link[1]])
                    if not self.dist[m[ie.interferer], m[ie.receiver]] > alpha * link:
                        ok = False
                        break
                if ok:
                    yield from rec(k + 1, used | low)
            m.pop(x, None)

        for mapping in rec(0, 0):
            yield mapping, tuple(self.flow_index[(mapping[s], mapping[d])] for s, d in flow_keys)


def identify(net: LocalNetwork, flow_set=None, class_subset=None,
             scheme=Scheme.PNC) -> dict[str, list[AtomInstance]]:
    """Instances of each requested class, one per automorphism orbit.

    ``flow_set`` defaults to the potential flows of ``net``; instances may only
    use flows listed there. The returned dict is keyed by class id in catalog
    order and lists instances in a deterministic discovery order.
    """
    scheme = Scheme(scheme)
    if flow_set is None:
        flow_set = potential_flows(net)
    flow_index = {tuple(f): i for i, f in enumerate(flow_set)}
    wanted = _class_ids(class_subset)
    matcher = _Matcher(net, flow_index)
    out: dict[str, list[AtomInstance]] = {}
    for atom in catalog():
        if atom.id not in wanted:
            continue
        autos = automorphisms(atom.id, scheme)
        found = []
        if flow_index:
            labels = atom.ci_graph.peripherals
            for mapping, fidx in matcher.match(atom, scheme):
                if _canonical(fidx, autos):
                    found.append(AtomInstance(atom.id, fidx, tuple(mapping[x] for x in labels), scheme))
        found.sort(key=lambda inst: inst.flows)
        out[atom.id] = found
    return out


def _class_ids(class_subset) -> set[str]:
    if class_subset is None:
        return {a.id for a in catalog()}
    return {get_atom(c).id for c in class_subset}


def build_matrix(instances, flow_set) -> IncidenceMatrix:
    """Zero-one matrix with a row per flow and a column per instance.

    ``instances`` may be the dict from :func:`identify` (columns follow
    catalog order) or a flat sequence (columns follow the sequence).
    """
    if isinstance(instances, dict):
        order = {a.id: i for i, a in enumerate(catalog())}
        flat = [inst for cid in sorted(instances, key=order.get) for inst in instances[cid]]
    else:
        flat = list(instances)
    flows = tuple(tuple(f) for f in flow_set)
    D = np.zeros((len(flows), len(flat)), dtype=np.int8)
    for j, inst in enumerate(flat):
        for f in inst.flows:
            if not 0 <= f < len(flows):
                raise ValueError(f"instance {inst} references flow {f} outside the flow set")
            D[f, j] = 1
    costs = np.array([inst.cost for inst in flat], dtype=float)
    return IncidenceMatrix(D, costs, tuple(flat), flows)
