"""Random single-relay networks and the geometric predicates behind atoms.

Distances are in units of the transmission range. The relay sits at the
origin; peripherals are indexed ``0..n-1`` and :data:`RELAY_INDEX` stands for
the relay wherever a node index is accepted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .atoms import RELAY, AtomClass, Scheme

RELAY_INDEX = -1
TX_RANGE = 1.0
# SIR of 10 dB under a path-loss exponent of 4
DEFAULT_ALPHA = 10 ** (10 / (10 * 4))


@dataclass(frozen=True, eq=False)
class LocalNetwork:
    positions: np.ndarray
    alpha: float = DEFAULT_ALPHA
    tx_range: float = field(default=TX_RANGE, repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be an (n, 2) array")
        if np.any(np.hypot(pos[:, 0], pos[:, 1]) > self.tx_range):
            raise ValueError("every peripheral must lie within range of the relay")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.positions)

    def __eq__(self, other):
        return (isinstance(other, LocalNetwork) and self.alpha == other.alpha
                and np.array_equal(self.positions, other.positions))

    __hash__ = None

    @cached_property
    def distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def point(self, u: int) -> np.ndarray:
        return np.zeros(2) if u == RELAY_INDEX else self.positions[u]

    def distance(self, u: int, v: int) -> float:
        if u == RELAY_INDEX or v == RELAY_INDEX:
            return float(np.hypot(*(self.point(u) - self.point(v))))
        return float(self.distances[u, v])

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = self.distances <= self.tx_range
        np.fill_diagonal(adj, False)
        return adj

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "peripherals": self.positions.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping) -> LocalNetwork:
        return cls(np.asarray(data["peripherals"], dtype=float).reshape(-1, 2),
                   float(data.get("alpha", DEFAULT_ALPHA)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> LocalNetwork:
        return cls.from_dict(json.loads(text))


def generate(n_r: int, r_inner: float = 0.5, r_outer: float = 1.0, seed=None, *,
             alpha: float = DEFAULT_ALPHA) -> LocalNetwork:
    """Scatter ``n_r`` peripherals uniformly by area over an annulus.

    ``seed`` goes straight to :func:`numpy.random.default_rng` (PCG64), so an
    int, a ``SeedSequence`` or an existing ``Generator`` all work.
    """
    if n_r < 2:
        raise ValueError("need at least two peripherals")
    if not 0 <= r_inner < r_outer <= TX_RANGE:
        raise ValueError(f"invalid radii: need 0 <= r_inner < r_outer <= 1, got {r_inner}, {r_outer}")
    rng = np.random.default_rng(seed)
    u = rng.random(n_r)
    theta = rng.uniform(0.0, 2 * math.pi, n_r)
    # inverse CDF of the radial density, which grows linearly with r
    r = np.sqrt(r_inner ** 2 + u * (r_outer ** 2 - r_inner ** 2))
    r = np.minimum(r, r_outer)
    return LocalNetwork(np.column_stack((r * np.cos(theta), r * np.sin(theta))), alpha)


def connected(net: LocalNetwork, u: int, v: int) -> bool:
    if u == RELAY_INDEX or v == RELAY_INDEX:
        return u != v
    return net.distance(u, v) <= net.tx_range


def interference_free(net: LocalNetwork, interferer: int, receiver: int,
                      guarded_link_length: float) -> bool:
    if guarded_link_length <= 0:
        raise ValueError("guarded link length must be positive")
    return net.distance(interferer, receiver) > net.alpha * guarded_link_length


def potential_flows(net: LocalNetwork) -> tuple[tuple[int, int], ...]:
    """Ordered peripheral pairs out of each other's range, in row-major order."""
    far = net.distances > net.tx_range
    us, vs = np.nonzero(far)
    return tuple(zip(us.tolist(), vs.tolist()))


def ci_check(net: LocalNetwork, atom: AtomClass, assignment: Mapping[str, int],
             scheme=Scheme.PNC) -> bool:
    """Does mapping template labels onto nodes meet the class requirements?"""
    missing = set(atom.ci_graph.peripherals) - set(assignment)
    if missing:
        raise ValueError(f"assignment misses labels {sorted(missing)}")
    m = dict(assignment)
    m[RELAY] = RELAY_INDEX
    ci = atom.ci_for(scheme)
    for e in ci.c_edges:
        u, v = (m[x] for x in e)
        if not connected(net, u, v):
            return False
    for s, d in atom.flow_set:
        if net.distance(m[s], m[d]) <= net.tx_range:
            return False
    for ie in ci.i_edges:
        link = net.distance(m[ie.link[0]], m[ie.link[1]])
        if not interference_free(net, m[ie.interferer], m[ie.receiver], link):
            return False
    return True
