"""Atom-based airtime scheduling for a single network-coding relay."""

from .atoms import Scheme, catalog, get_atom, slot_cost
from .estimator import AtomScheduler
from .identification import build_matrix, identify
from .scheduler import schedule, schedule_greedy
from .topology import LocalNetwork, generate, potential_flows

__all__ = [
    "AtomScheduler", "LocalNetwork", "Scheme", "build_matrix", "catalog", "generate",
    "get_atom", "identify", "potential_flows", "schedule", "schedule_greedy", "slot_cost",
]
__version__ = "0.1.0"
