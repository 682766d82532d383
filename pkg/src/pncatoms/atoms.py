"""The nine PNC atom classes as data.

Each class bundles a connectivity/interference requirement graph, the flows
it carries, and two transmission patterns (PNC and the straightforward
network-coding variant). Peripheral nodes are single-letter labels; the relay
is always ``"R"`` and is implicitly connected to every peripheral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Mapping

from . import gf2

RELAY = "R"

ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX")


class Scheme(str, Enum):
    PNC = "pnc"
    SNC = "snc"
    NONNC = "nonnc"


@dataclass(frozen=True)
class IEdge:
    """``interferer`` must be outside the interference range of ``receiver``
    while ``receiver`` listens to ``link[0]`` (``link[1] == receiver``)."""

    interferer: str
    receiver: str
    link: tuple[str, str]


@dataclass(frozen=True)
class CIGraph:
    peripherals: tuple[str, ...]
    c_edges: frozenset = frozenset()
    i_edges: tuple[IEdge, ...] = ()

    def __post_init__(self):
        labels = set(self.peripherals)
        if RELAY in labels or len(labels) != len(self.peripherals):
            raise ValueError("peripheral labels must be distinct and exclude the relay")
        for e in self.c_edges:
            if len(e) != 2 or not e <= labels:
                raise ValueError(f"bad C-edge {set(e)}")
        for ie in self.i_edges:
            if not {ie.interferer, ie.receiver} <= labels:
                raise ValueError(f"bad I-edge {ie}")
            if frozenset((ie.interferer, ie.receiver)) in self.c_edges:
                raise ValueError(f"pair {ie.interferer}-{ie.receiver} is both C- and I-edge")
            tx, rx = ie.link
            if rx != ie.receiver:
                raise ValueError(f"I-edge {ie} guards a link not ending at its receiver")
            if RELAY not in (tx, rx) and frozenset(ie.link) not in self.c_edges:
                raise ValueError(f"I-edge {ie} guards a link that is not a C-edge")

    @property
    def labels(self) -> tuple[str, ...]:
        return (RELAY,) + self.peripherals

    def connected(self, u: str, v: str) -> bool:
        if u == v:
            return False
        if RELAY in (u, v):
            return True
        return frozenset((u, v)) in self.c_edges

    def guarded(self, interferer: str, receiver: str, sources) -> bool:
        """True if an I-edge protects ``receiver`` from ``interferer`` while it
        hears one of ``sources``."""
        return any(
            ie.interferer == interferer and ie.receiver == receiver and ie.link[0] in sources
            for ie in self.i_edges
        )

    def without_interference(self) -> CIGraph:
        return CIGraph(self.peripherals, self.c_edges, ())

    def relabel(self, mapping: Mapping[str, str]) -> CIGraph:
        m = dict(mapping)
        m.setdefault(RELAY, RELAY)
        return CIGraph(
            tuple(m[p] for p in self.peripherals),
            frozenset(frozenset(m[x] for x in e) for e in self.c_edges),
            tuple(IEdge(m[ie.interferer], m[ie.receiver], (m[ie.link[0]], m[ie.link[1]]))
                  for ie in self.i_edges),
        )

    def neighbours(self, u: str) -> set[str]:
        return {v for v in self.peripherals if self.connected(u, v)}


@dataclass(frozen=True)
class FlowSet:
    flows: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for s, d in self.flows:
            if s == d:
                raise ValueError(f"flow {s}->{d} has equal endpoints")
        if len(set(self.flows)) != len(self.flows):
            raise ValueError("duplicate flows")

    def __len__(self):
        return len(self.flows)

    def __iter__(self):
        return iter(self.flows)

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(s for s, _ in self.flows))

    @property
    def packet_names(self) -> tuple[str, ...]:
        # Source label when each source owns one flow, else "S>D".
        srcs = [s for s, _ in self.flows]
        if len(set(srcs)) == len(srcs):
            return tuple(srcs)
        return tuple(f"{s}>{d}" for s, d in self.flows)

    def native(self, node: str) -> int:
        return gf2.xor_all(1 << i for i, (s, _) in enumerate(self.flows) if s == node)

    def targets(self, node: str) -> list[int]:
        return [1 << i for i, (_, d) in enumerate(self.flows) if d == node]

    def relabel(self, mapping: Mapping[str, str]) -> FlowSet:
        return FlowSet(tuple((mapping[s], mapping[d]) for s, d in self.flows))


@dataclass(frozen=True)
class Slot:
    transmissions: Mapping[str, int]
    receptions: Mapping[str, int] = field(default_factory=dict)

    @property
    def is_downlink(self) -> bool:
        return RELAY in self.transmissions

    def key(self):
        return (tuple(sorted(self.transmissions.items())), tuple(sorted(self.receptions.items())))


@dataclass(frozen=True)
class TransmissionPattern:
    slots: tuple[Slot, ...]

    def __len__(self):
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    def structural_issues(self) -> list[str]:
        """Role constraints every catalog pattern obeys (empty list when fine)."""
        issues = []
        for i, slot in enumerate(self.slots):
            tx = set(slot.transmissions)
            if tx & set(slot.receptions):
                issues.append(f"slot {i}: node transmits and receives")
            if slot.is_downlink:
                if tx != {RELAY}:
                    issues.append(f"slot {i}: peripheral transmits in a downlink slot")
            else:
                if RELAY not in slot.receptions:
                    issues.append(f"slot {i}: relay neither transmits nor receives")
                if not 1 <= len(tx) <= 2:
                    issues.append(f"slot {i}: {len(tx)} uplink transmitters")
        return issues

    def relabel(self, mapping: Mapping[str, str], perm_bits=None) -> TransmissionPattern:
        m = dict(mapping)
        m.setdefault(RELAY, RELAY)
        f = perm_bits or (lambda v: v)
        return TransmissionPattern(tuple(
            Slot({m[k]: f(v) for k, v in s.transmissions.items()},
                 {m[k]: f(v) for k, v in s.receptions.items()})
            for s in self.slots
        ))

    def to_dict(self, names) -> list[dict]:
        return [
            {
                "transmit": {k: gf2.format_expression(v, names) for k, v in sorted(s.transmissions.items())},
                "receive": {k: gf2.format_expression(v, names) for k, v in sorted(s.receptions.items())},
            }
            for s in self.slots
        ]


@dataclass(frozen=True)
class SlotCosts:
    pnc: int
    snc: int
    nonnc: int

    def __getitem__(self, scheme) -> int:
        return getattr(self, Scheme(scheme).value)


@dataclass(frozen=True)
class AtomClass:
    id: str
    kind: str
    ci_graph: CIGraph
    flow_set: FlowSet
    pnc_pattern: TransmissionPattern
    snc_pattern: TransmissionPattern
    slot_costs: SlotCosts

    @property
    def number(self) -> int:
        return ROMAN.index(self.id) + 1

    @property
    def peripheral_count(self) -> int:
        return len(self.ci_graph.peripherals)

    @property
    def n_flows(self) -> int:
        return len(self.flow_set)

    def ci_for(self, scheme) -> CIGraph:
        if Scheme(scheme) is Scheme.SNC:
            return self.ci_graph.without_interference()
        return self.ci_graph

    def pattern_for(self, scheme) -> TransmissionPattern:
        scheme = Scheme(scheme)
        if scheme is Scheme.PNC:
            return self.pnc_pattern
        if scheme is Scheme.SNC:
            return self.snc_pattern
        raise ValueError("non-NC has no atom pattern")

    def role_index(self, label: str) -> int:
        return self.ci_graph.peripherals.index(label)

    def to_dict(self) -> dict:
        names = self.flow_set.packet_names
        return {
            "id": self.id,
            "kind": self.kind,
            "peripherals": list(self.ci_graph.peripherals),
            "c_edges": sorted(sorted(e) for e in self.ci_graph.c_edges),
            "i_edges": [
                {"interferer": ie.interferer, "receiver": ie.receiver, "link": list(ie.link)}
                for ie in self.ci_graph.i_edges
            ],
            "flows": [list(f) for f in self.flow_set],
            "pnc_pattern": self.pnc_pattern.to_dict(names),
            "snc_pattern": self.snc_pattern.to_dict(names),
            "costs": {"pnc": self.slot_costs.pnc, "snc": self.slot_costs.snc,
                      "nonnc": self.slot_costs.nonnc},
        }


# --- construction helpers -------------------------------------------------

def _edges(text: str) -> frozenset:
    return frozenset(frozenset(tok.split("-")) for tok in text.split())


def _iedge(text: str) -> IEdge:
    # "B|D:A>D" -> interferer B, receiver D, guarded link A->D
    pair, link = text.split(":")
    i, r = pair.split("|")
    tx, rx = link.split(">")
    return IEdge(i, r, (tx, rx))


def _pattern(flows: FlowSet, *slots) -> TransmissionPattern:
    """Build a pattern from ``(transmit, receive)`` text pairs.

    ``transmit`` is a space-separated list of ``node`` (sends its native
    packet) or ``node=expr``; ``receive`` maps space-separated node lists
    to the expression they must obtain, e.g. ``{"R B D": "A+C"}``.
    """
    names = flows.packet_names
    out = []
    for tx_text, rx_spec in slots:
        tx = {}
        for tok in tx_text.split():
            if "=" in tok:
                node, expr = tok.split("=")
                tx[node] = gf2.parse_expression(expr, names)
            else:
                tx[tok] = flows.native(tok)
        rx = {}
        for nodes, expr in rx_spec.items():
            for node in nodes.split():
                rx[node] = gf2.parse_expression(expr, names)
        out.append(Slot(tx, rx))
    return TransmissionPattern(tuple(out))


def _flows(text: str) -> FlowSet:
    return FlowSet(tuple(tuple(tok.split(">")) for tok in text.split()))


def _atom(id, kind, peripherals, c_edges, i_edges, flows, pnc, snc, costs):
    fs = _flows(flows)
    ci = CIGraph(tuple(peripherals), _edges(c_edges), tuple(_iedge(t) for t in i_edges.split()))
    return AtomClass(id, kind, ci, fs, _pattern(fs, *pnc), _pattern(fs, *snc), SlotCosts(*costs))


def _build_catalog() -> tuple[AtomClass, ...]:
    atoms = [
        _atom("I", "TWRC", "AB", "", "", "A>B B>A",
              pnc=[("A B", {"R": "A+B"}), ("R=A+B", {"A B": "A+B"})],
              snc=[("A", {"R": "A"}), ("B", {"R": "B"}), ("R=A+B", {"A B": "A+B"})],
              costs=(2, 3, 4)),
        _atom("II", "TWRC", "ABC", "A-C", "B|C:A>C", "A>B B>C",
              pnc=[("A B", {"R": "A+B", "C": "A"}), ("R=A+B", {"B C": "A+B"})],
              snc=[("A", {"R C": "A"}), ("B", {"R": "B"}), ("R=A+B", {"B C": "A+B"})],
              costs=(2, 3, 4)),
        _atom("III", "Triangle", "ABC", "", "", "A>B B>C C>A",
              pnc=[("A B", {"R": "A+B"}), ("B C", {"R": "B+C"}),
                   ("R=A+B", {"A B C": "A+B"}), ("R=A+C", {"A B C": "A+C"})],
              snc=[("A", {"R": "A"}), ("B", {"R": "B"}), ("C", {"R": "C"}),
                   ("R=A+B", {"A B C": "A+B"}), ("R=B+C", {"A B C": "B+C"})],
              costs=(4, 5, 6)),
        _atom("IV", "Triangle", "ABC", "", "", "B>C C>B A>B",
              pnc=[("B C", {"R": "B+C"}), ("A", {"R": "A"}),
                   ("R=B+C", {"B C": "B+C"}), ("R=A", {"B": "A"})],
              snc=[("B", {"R": "B"}), ("C", {"R": "C"}), ("A", {"R": "A"}),
                   ("R=B+C", {"B C": "B+C"}), ("R=A", {"B": "A"})],
              costs=(4, 5, 6)),
        _atom("V", "Cross", "ABCD", "A-D B-C", "B|D:A>D A|C:B>C", "A>C B>D",
              pnc=[("A B", {"R": "A+B", "D": "A", "C": "B"}), ("R=A+B", {"C D": "A+B"})],
              snc=[("A", {"R D": "A"}), ("B", {"R C": "B"}), ("R=A+B", {"C D": "A+B"})],
              costs=(2, 3, 4)),
        _atom("VI", "Cross", "ABCD", "A-B A-D C-B C-D", "", "A>C C>A B>D D>B",
              pnc=[("A C", {"R B D": "A+C"}), ("B D", {"R A C": "B+D"}),
                   ("R=A+B+C+D", {"A B C D": "A+B+C+D"})],
              snc=[("A", {"R B D": "A"}), ("C", {"R B D": "C"}), ("B", {"R A C": "B"}),
                   ("D", {"R A C": "D"}), ("R=A+B+C+D", {"A B C D": "A+B+C+D"})],
              costs=(3, 5, 8)),
        _atom("VII", "Star", "ABCDEF", "A-B B-C C-D D-E E-F F-A", "C|F:A>F A|D:C>D",
              "A>D B>E C>F",
              pnc=[("A C", {"R": "A+C", "F": "A", "D": "C"}), ("B", {"R": "B"}),
                   ("R=A+C", {"D F": "A+C"}), ("R=B", {"E": "B"})],
              snc=[("A", {"R F": "A"}), ("C", {"R D": "C"}), ("B", {"R": "B"}),
                   ("R=A+C", {"D F": "A+C"}), ("R=B", {"E": "B"})],
              costs=(4, 5, 6)),
        _atom("VIII", "Star", "ABCDEF", "A-B A-C B-F C-E D-E D-F", "E|B:F>B F|C:E>C",
              "A>D E>B F>C",
              pnc=[("A", {"R B C": "A"}), ("E F", {"R D": "E+F", "B": "F", "C": "E"}),
                   ("R=A+E+F", {"B C D": "A+E+F"})],
              snc=[("A", {"R B C": "A"}), ("E", {"R C D": "E"}), ("F", {"R B D": "F"}),
                   ("R=A+E+F", {"B C D": "A+E+F"})],
              costs=(3, 4, 6)),
        # hexagon A-B-F-D-E-C with antipodal exchanges; the middle sources
        # forward what they overheard in the first slot mixed with their own
        _atom("IX", "Star", "ABCDEF", "A-B B-F F-D D-E E-C C-A",
              "D|B:A>B D|C:A>C A|E:D>E A|F:D>F B|E:C>E C|F:B>F E|B:F>B F|C:E>C",
              "A>D D>A B>E E>B C>F F>C",
              pnc=[("A D", {"R": "A+D", "B C": "A", "E F": "D"}),
                   ("B=A+B C=A+C", {"R": "B+C", "A": "B+C", "F": "A+B", "E": "A+C"}),
                   ("E=D+E F=D+F", {"R": "E+F", "D": "E+F", "B": "D+F", "C": "D+E"}),
                   ("R=A+B+C+D", {"A B C D E F": "A+B+C+D"}),
                   ("R=A+D+E+F", {"A B C D E F": "A+D+E+F"})],
              snc=[("A", {"R B C": "A"}), ("D", {"R E F": "D"}),
                   ("B=A+B", {"R A F": "A+B"}), ("C=A+C", {"R A E": "A+C"}),
                   ("E=D+E", {"R C D": "D+E"}), ("F=D+F", {"R B D": "D+F"}),
                   ("R=A+B+C+D", {"A B C D E F": "A+B+C+D"}),
                   ("R=A+D+E+F", {"A B C D E F": "A+D+E+F"})],
              costs=(5, 8, 12)),
    ]
    return tuple(atoms)


_CATALOG: tuple[AtomClass, ...] | None = None


def catalog() -> tuple[AtomClass, ...]:
    """The nine atom classes, ordered by peripheral count (I through IX)."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
    return _CATALOG


def get_atom(class_id) -> AtomClass:
    key = _normalise_id(class_id)
    for atom in catalog():
        if atom.id == key:
            return atom
    raise KeyError(f"unknown atom class {class_id!r}")


def _normalise_id(class_id) -> str:
    if isinstance(class_id, int):
        if not 1 <= class_id <= 9:
            raise KeyError(f"unknown atom class {class_id!r}")
        return ROMAN[class_id - 1]
    key = str(class_id).strip().upper()
    if key.isdigit():
        return _normalise_id(int(key))
    if key not in ROMAN:
        raise KeyError(f"unknown atom class {class_id!r}")
    return key


def slot_cost(class_id, scheme) -> int:
    return get_atom(class_id).slot_costs[scheme]


@dataclass(frozen=True)
class Molecule:
    """Two instances of one class with mutually reversed flows, and the
    equivalent cover by two-way exchanges (atom I)."""

    class_id: str
    forward: FlowSet
    reverse_mapping: dict
    reverse: FlowSet
    twrc_pairs: tuple[tuple[str, str], ...]
    paired_slots: int
    twrc_slots: int

    @property
    def flows(self) -> set[tuple[str, str]]:
        return set(self.forward) | set(self.reverse)


def molecule(class_id) -> Molecule:
    atom = get_atom(class_id)
    if atom.id not in ("III", "VIII"):
        raise ValueError(f"molecules are defined for atoms III and VIII, not {atom.id}")
    ci, fwd = atom.ci_graph, atom.flow_set
    wanted = {(d, s) for s, d in fwd}
    # label permutation that keeps the connectivity and reverses every flow
    for perm in permutations(ci.peripherals):
        m = dict(zip(ci.peripherals, perm))
        rev = fwd.relabel(m)
        if set(rev) == wanted and ci.relabel(m).c_edges == ci.c_edges:
            break
    else:  # pragma: no cover - both classes admit one
        raise RuntimeError(f"no flow-reversing relabeling for atom {atom.id}")
    pairs = tuple(tuple(sorted((s, d))) for s, d in fwd)
    twrc = get_atom("I").slot_costs.pnc
    return Molecule(atom.id, fwd, m, rev, pairs,
                    2 * atom.slot_costs.pnc, twrc * len(pairs))
