"""Covering LP  min b'y  s.t.  D y >= c,  y >= 0  and its integral rounding.

Two interchangeable back ends:

* ``"simplex"``: a dense tableau simplex run on the dual
  ``max c'u  s.t.  D'u <= b,  u >= 0``. With ``b > 0`` the slack basis is
  feasible, so a single phase suffices; the primal optimum is read off the
  reduced costs of the slacks. Dantzig pricing, switching to Bland's rule
  after a run of degenerate pivots so the method cannot cycle.
* ``"highs"``: :func:`scipy.optimize.linprog` (dual simplex) on the same dual.

``"auto"`` uses the tableau up to ``AUTO_LIMIT`` columns and column
generation over HiGHS restricted problems beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TOL = 1e-9


class LPInfeasible(ValueError):
    """A flow with positive demand has no covering column."""


@dataclass(frozen=True)
class LPResult:
    y: np.ndarray | None
    objective: float
    status: str
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _validate(D, b, c):
    c = np.asarray(c, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if sparse.issparse(D):
        D = sparse.csc_matrix(D, dtype=float)
    else:
        D = np.asarray(D, dtype=float).reshape(len(c), len(b))
    if D.shape != (len(c), len(b)):
        raise ValueError(f"shape mismatch: D {D.shape}, b {b.shape}, c {c.shape}")
    if np.any(b <= 0):
        raise ValueError("column costs must be strictly positive")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("demands must be finite and non-negative")
    return D, b, c


def _dense(D) -> np.ndarray:
    return D.toarray() if sparse.issparse(D) else D


def _column(D, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows and values of the positive entries of column ``j``."""
    if sparse.issparse(D):
        lo, hi = D.indptr[j], D.indptr[j + 1]
        keep = D.data[lo:hi] > 0
        return D.indices[lo:hi][keep], D.data[lo:hi][keep]
    rows = np.flatnonzero(D[:, j] > 0)
    return rows, D[rows, j]


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    others = np.flatnonzero(T[:, col])
    others = others[others != row]
    # pivot rows stay sparse for a long time; touch only their nonzeros
    nz = np.flatnonzero(T[row])
    if 4 * nz.size < T.shape[1]:
        T[np.ix_(others, nz)] -= np.outer(T[others, col], T[row, nz])
    else:
        T[others] -= np.outer(T[others, col], T[row])
    T[others, col] = 0.0


def simplex_max(A: np.ndarray, rhs: np.ndarray, obj: np.ndarray, *,
                max_iter: int = 50_000, degenerate_limit: int = 50):
    """Maximise ``obj'x`` s.t. ``A x <= rhs``, ``x >= 0`` with ``rhs >= 0``.

    Returns ``(x, value, duals, iterations)``; ``x`` is None if unbounded.
    """
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = rhs
    T[m, :n] = -obj
    basis = list(range(n, n + m))
    bland = False
    stalled = 0
    for it in range(max_iter):
        cost = T[m, :-1]
        if bland:
            entering = np.flatnonzero(cost < -TOL)
            if not entering.size:
                break
            col = int(entering[0])
        else:
            col = int(np.argmin(cost))
            if cost[col] >= -TOL:
                break
        column = T[:m, col]
        pos = column > TOL
        if not pos.any():
            return None, math.inf, None, it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + TOL)
        # smallest basic index among ties: Bland's leaving rule
        row = int(min(ties, key=lambda r: basis[r]))
        stalled = stalled + 1 if best <= TOL else 0
        if stalled > degenerate_limit:
            bland = True
        _pivot(T, row, col)
        basis[row] = col
    else:
        raise RuntimeError(f"simplex did not converge in {max_iter} iterations")
    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    duals = T[m, n:n + m].copy()
    return x[:n], float(T[m, -1]), duals, it


def _solve_simplex(D, b, c) -> LPResult:
    u, value, y, iters = simplex_max(_dense(D).T, b, c)
    if u is None:
        return LPResult(None, math.inf, INFEASIBLE, iters)
    y = np.clip(y, 0.0, None)
    return LPResult(y, float(b @ y), OPTIMAL, iters)


def _master_simplex(D_sub, b_sub, c):
    u, _, y, it = simplex_max(_dense(D_sub).T, b_sub, c)
    return u, y, it


def _master_highs(D_sub, b_sub, c):
    from scipy.optimize import linprog

    res = linprog(-c, A_ub=D_sub.T, b_ub=b_sub, bounds=(0, None), method="highs-ds")
    if res.status == 3:
        return None, None, int(res.nit)
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    return res.x, -res.ineqlin.marginals, int(res.nit)


def _solve_colgen(D, b, c, *, batch: int = 300, master=_master_simplex) -> LPResult:
    """Solve over a growing subset of columns.

    Columns are priced against the current flow duals and the most negative
    reduced costs join the restricted problem until none is left. ``master``
    solves each restricted problem and returns ``(u, y, iterations)``.
    """
    n = len(b)
    sizes = np.asarray((D > 0).sum(axis=0)).ravel()
    ratio = b / np.maximum(sizes, 1)
    order = np.argsort(ratio, kind="stable")
    active = set(order[:batch].tolist())
    # plus the cheapest-per-flow column of every demanded row
    rows = sparse.csr_matrix(D) if sparse.issparse(D) else None
    for f in np.flatnonzero(c > 0):
        cols = rows.indices[rows.indptr[f]:rows.indptr[f + 1]] if rows is not None \
            else np.flatnonzero(D[f] > 0)
        active.add(int(cols[np.argmin(ratio[cols])]))
    iters = 0
    while True:
        cols = np.array(sorted(active))
        u, y_sub, it = master(D[:, cols], b[cols], c)
        iters += it
        if u is None:
            return LPResult(None, math.inf, INFEASIBLE, iters)
        reduced = b - np.asarray(D.T @ u).ravel()
        reduced[cols] = 0.0
        entering = np.flatnonzero(reduced < -1e-9)
        if not entering.size:
            y = np.zeros(n)
            y[cols] = np.clip(y_sub, 0.0, None)
            return LPResult(y, float(b @ y), OPTIMAL, iters)
        pick = entering[np.argsort(reduced[entering], kind="stable")[:batch]]
        active.update(pick.tolist())


def _solve_highs(D, b, c) -> LPResult:
    # same dual formulation as the tableau route, so both land on basic
    # solutions of the same polytope
    u, y, it = _master_highs(D, b, c)
    if u is None:
        return LPResult(None, math.inf, INFEASIBLE, it)
    y = np.clip(y, 0.0, None)
    return LPResult(y, float(b @ y), OPTIMAL, it)


COLGEN_THRESHOLD = 600
# above this many columns "auto" prices columns for HiGHS restricted problems
AUTO_LIMIT = 3000
SOLVERS = {"simplex": _solve_simplex, "highs": _solve_highs}


def solve_lp(D, b, c, *, solver: str = "simplex") -> LPResult:
    """Minimum-cost fractional cover of demand ``c`` by the columns of ``D``."""
    D, b, c = _validate(D, b, c)
    if not np.any(c > 0):
        return LPResult(np.zeros(len(b)), 0.0, OPTIMAL)
    uncovered = (c > 0) & (np.asarray((D > 0).sum(axis=1)).ravel() == 0)
    if uncovered.any():
        return LPResult(None, math.inf, INFEASIBLE)
    if solver == "auto":
        if D.shape[1] > AUTO_LIMIT:
            return _solve_colgen(D, b, c, batch=1000, master=_master_highs)
        solver = "simplex"
    if solver == "simplex" and D.shape[1] > COLGEN_THRESHOLD:
        return _solve_colgen(D, b, c)
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}") from None
    return fn(D, b, c)


def _prune(y: np.ndarray, D, b, c, keep: int | None = None) -> np.ndarray:
    """Drop surplus executions, most expensive columns first."""
    slack = np.asarray(D @ y, dtype=float).ravel() - c
    for j in sorted(np.flatnonzero(y), key=lambda j: (-b[j], j)):
        if j == keep:
            continue
        rows, vals = _column(D, j)
        room = int(np.floor((slack[rows] / vals).min() + 1e-9)) if rows.size else int(y[j])
        cut = min(int(y[j]), room)
        if cut > 0:
            y[j] -= cut
            slack[rows] -= cut * vals
    return y


def integralize(y_frac, D, b, c) -> np.ndarray:
    """Round up, then drop surplus executions of the most expensive columns."""
    D, b, c = _validate(D, b, c)
    y = np.ceil(np.asarray(y_frac, dtype=float) - 1e-7).clip(0).astype(np.int64)
    if np.any(D @ y < c - 1e-9):
        raise ValueError("rounded vector does not cover the demand")
    return _prune(y, D, b, c)


def improve(y, D, b, c, *, target: float = 0.0, max_candidates: int = 2000) -> np.ndarray:
    """Local search on an integral cover: add one execution, prune the rest.

    Moves are kept only when they lower the cost. Candidates are tried in
    order of cost per covered demand row; the search stops at ``target``.
    """
    D, b, c = _validate(D, b, c)
    y = np.asarray(y, dtype=np.int64).copy()
    demanded = np.asarray(D[c > 0].sum(axis=0) if sparse.issparse(D) else
                          (D[c > 0] > 0).sum(axis=0)).ravel()
    useful = np.flatnonzero(demanded > 0)
    order = useful[np.argsort(b[useful] / demanded[useful], kind="stable")][:max_candidates]
    improved = True
    while improved and b @ y > target + 1e-9:
        improved = False
        for j in order:
            trial = y.copy()
            trial[j] += 1
            trial = _prune(trial, D, b, c, keep=j)
            if b @ trial < b @ y - 1e-9:
                y = _prune(trial, D, b, c)
                improved = True
                break
    return y


def dive(D, b, c, y_frac, bound: float, *, solver: str = "simplex",
         max_solves: int = 60) -> np.ndarray | None:
    """Depth-first branch and bound for an integral cover costing at most ``bound``.

    The largest fractional column is raised to its ceiling, or removed when
    its floor equals its current lower bound; other caps are not explored.
    A branch survives only while its LP value stays within ``bound`` and the
    first integral LP point wins. Returns None once the LP budget runs out.
    """
    D, b, c = _validate(D, b, c)
    n = len(b)
    budget = [max_solves]

    def relax(low, allowed):
        budget[0] -= 1
        residual = np.clip(c - np.asarray(D @ low).ravel(), 0, None)
        cols = np.flatnonzero(allowed)
        res = solve_lp(D[:, cols], b[cols], residual, solver=solver)
        if not res.ok or b @ low + res.objective > bound + 1e-7:
            return None
        y = low.astype(float)
        y[cols] += res.y
        return y

    def search(low, allowed, y):
        frac = np.flatnonzero(np.abs(y - np.round(y)) > 1e-7)
        if not frac.size:
            return np.round(y).astype(np.int64)
        j = min(frac, key=lambda k: (-round(y[k] % 1, 7), b[k], k))
        up = low.copy()
        up[j] = max(up[j], math.ceil(y[j]))
        children = [(up, allowed)]
        if math.floor(y[j]) <= low[j]:
            # capping at the current lower bound removes the column
            capped = allowed.copy()
            capped[j] = False
            children.append((low, capped))
        for child_low, child_allowed in children:
            if budget[0] <= 0:
                return None
            child_y = relax(child_low, child_allowed)
            if child_y is not None:
                found = search(child_low, child_allowed, child_y)
                if found is not None:
                    return found
        return None

    found = search(np.zeros(n, dtype=np.int64), np.ones(n, dtype=bool),
                   np.asarray(y_frac, dtype=float))
    return None if found is None else _prune(found, D, b, c)


def round_iteratively(D, b, c, *, solver: str = "simplex", y_frac=None,
                      max_single: int = 25) -> np.ndarray:
    """Fix whole executions, re-solve for what is left, round up at the end.

    Starts from ``y_frac`` (solved here if omitted). Each round keeps
    ``floor(y)`` and re-optimises the residual demand. When every coordinate
    is below one, the largest is fixed to one instead, at most ``max_single``
    times; :func:`integralize` finishes. The plain rounding of the original
    solution is used instead if cheaper. While the result stays above the
    rounded-up LP bound, :func:`improve` and then :func:`dive` try to close
    the gap.
    """
    D, b, c = _validate(D, b, c)
    if y_frac is None:
        res = solve_lp(D, b, c, solver=solver)
        if not res.ok:
            raise LPInfeasible("demand cannot be covered")
        y_frac = res.y
    plain = integralize(y_frac, D, b, c)
    fixed = np.zeros(len(b), dtype=np.int64)
    y = np.asarray(y_frac, dtype=float)
    residual = c.copy()
    singles = 0
    while residual.any():
        step = np.floor(y + 1e-7).astype(np.int64)
        if not step.any():
            if singles >= max_single or not (y > 1e-7).any():
                break
            singles += 1
            # largest fractional value, cheaper column on ties
            j = min(np.flatnonzero(y > 1e-7), key=lambda k: (-round(y[k], 7), b[k], k))
            step[j] = 1
        fixed += step
        residual = np.clip(c - np.asarray(D @ fixed).ravel(), 0, None)
        y = solve_lp(D, b, residual, solver=solver).y if residual.any() else np.zeros(len(b))
    total = fixed + integralize(y, D, b, residual)
    total = integralize(total, D, b, c)
    best = total if b @ total <= b @ plain else plain
    bound = math.ceil(float(b @ np.asarray(y_frac, dtype=float)) - 1e-7)
    if b @ best > bound:
        best = improve(best, D, b, c, target=bound)
    if b @ best > bound:
        dived = dive(D, b, c, y_frac, bound, solver=solver)
        if dived is not None and b @ dived < b @ best:
            best = dived
    return best
