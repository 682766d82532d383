"""Scikit-learn style front end.

``fit`` takes a network (or an array of peripheral positions) and identifies
atom instances once; ``predict`` maps demand rows to slot counts and
``transform`` maps them to integral airtime per column, where the columns are
the identified instances followed by one store-and-forward column per flow.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .identification import build_matrix
from .scheduler import Schedule, _instances_for, parse_scheme, schedule
from .topology import DEFAULT_ALPHA, potential_flows
from .validation import check_demands, check_network


class AtomScheduler(BaseEstimator):
    """Schedule relay traffic with atom decompositions.

    Parameters
    ----------
    scheme : str
        Scheme name understood by :func:`~pncatoms.scheduler.parse_scheme`,
        e.g. ``"pnc9"``, ``"pnc-i-ii-v"``, ``"snc9"`` or ``"nonnc"``.
    solver : {"simplex", "highs", "auto"}
        LP back end.
    greedy : bool
        Use the priority heuristic instead of the LP.
    alpha : float
        Interference factor, used only when ``fit`` receives raw positions.
    """

    def __init__(self, scheme: str = "pnc9", solver: str = "simplex", greedy: bool = False,
                 alpha: float = DEFAULT_ALPHA):
        self.scheme = scheme
        self.solver = solver
        self.greedy = greedy
        self.alpha = alpha

    def fit(self, X, y=None):
        config = parse_scheme(self.scheme)
        if self.solver not in ("simplex", "highs", "auto"):
            raise ValueError(f"unknown solver {self.solver!r}")
        self.network_ = check_network(X, self.alpha)
        self.flows_ = tuple(potential_flows(self.network_))
        self.instances_ = _instances_for(self.network_, self.flows_, config, None)
        self.incidence_ = build_matrix(self.instances_, self.flows_)
        self.n_flows_ = len(self.flows_)
        return self

    def _schedules(self, C):
        check_is_fitted(self, "instances_")
        rows = check_demands(C, self.n_flows_)
        return [schedule(self.network_, c, self.scheme, instances=self.instances_,
                         solver=self.solver, greedy=self.greedy, flows=self.flows_)
                for c in rows]

    def schedule(self, c) -> Schedule:
        """Full schedule for a single demand vector."""
        (out,) = self._schedules(np.asarray(c).reshape(1, -1))
        return out

    def predict(self, C) -> np.ndarray:
        """Total slots for each demand row."""
        return np.array([s.total_slots for s in self._schedules(C)], dtype=np.int64)

    def transform(self, C) -> np.ndarray:
        """Execution counts, shape ``(n_rows, n_instances + n_flows)``."""
        scheds = self._schedules(C)
        col = {inst: j for j, inst in enumerate(self.incidence_.instances)}
        n_inst = len(col)
        out = np.zeros((len(scheds), n_inst + self.n_flows_), dtype=np.int64)
        for i, s in enumerate(scheds):
            for e in s.executions:
                j = n_inst + e.flow if e.instance is None else col[e.instance]
                out[i, j] += e.count
        return out

    def fit_predict(self, X, C) -> np.ndarray:
        return self.fit(X).predict(C)
