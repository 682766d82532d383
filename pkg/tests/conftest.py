import math
from functools import lru_cache

import numpy as np
import pytest

from pncatoms.topology import LocalNetwork

# square of four peripherals; A=0, B=1, C=2, D=3 counter-clockwise
SQUARE_POSITIONS = [(0.6 * math.cos(k * math.pi / 2), 0.6 * math.sin(k * math.pi / 2)) for k in range(4)]
SQUARE_ALPHA = 1.3
SQUARE_DEMAND = {(0, 2): 3, (2, 0): 4, (1, 3): 2, (3, 1): 1}

# cross (0-3), hexagon (4-9) and triangle (10-12) around one relay
MIXED_POSITIONS = [
    [-0.27, -0.536], [0.536, -0.27], [0.27, 0.536], [-0.536, 0.27],
    [0.133, 0.585], [-0.44, 0.408], [-0.573, -0.177], [-0.133, -0.585], [0.44, -0.408],
    [0.573, 0.177],
    [-0.292, 0.745], [-0.499, -0.625], [0.791, -0.12],
]
MIXED_FLOWS = [(0, 2), (2, 0), (1, 3), (3, 1), (4, 7), (8, 5), (6, 9), (10, 11), (11, 12), (12, 10)]


@pytest.fixture
def square_net():
    return LocalNetwork(np.array(SQUARE_POSITIONS), alpha=SQUARE_ALPHA)


@pytest.fixture
def mixed_net():
    return LocalNetwork(np.array(MIXED_POSITIONS))


def demand_vector(flows, wanted):
    c = np.zeros(len(flows), dtype=np.int64)
    for f, n in (wanted.items() if isinstance(wanted, dict) else ((f, 1) for f in wanted)):
        c[list(flows).index(f)] += n
    return c


def ilp_optimum(D, b, c):
    """Exact minimum of b'y over integral y >= 0 with Dy >= c.

    Dynamic programme over residual demand vectors; only usable when the
    product of (c_i + 1) is small.
    """
    D = np.asarray(D.toarray() if hasattr(D, "toarray") else D) > 0
    b = [float(v) for v in b]
    cols = [tuple(np.flatnonzero(D[:, j])) for j in range(D.shape[1])]

    @lru_cache(maxsize=None)
    def best(rem):
        if not any(rem):
            return 0.0
        first = next(i for i, r in enumerate(rem) if r)
        out = math.inf
        # some column must serve the first open flow
        for j, rows in enumerate(cols):
            if first in rows:
                nxt = list(rem)
                for r in rows:
                    nxt[r] = max(0, nxt[r] - 1)
                out = min(out, b[j] + best(tuple(nxt)))
        return out

    return best(tuple(int(v) for v in c))


# acceptance verdicts, echoed in the terminal summary even when output is captured
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
