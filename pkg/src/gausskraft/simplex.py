"""Transportation simplex for balanced problems with forbidden arcs.

Minimizes sum c_ij g_ij subject to row sums = supply, column sums = demand,
g >= 0 and g_ij = 0 on forbidden arcs.  The basis is a spanning tree of the
bipartite row/column graph; dual potentials follow from the tree and the
entering arc is priced by the most negative reduced cost, with Bland's rule
(lowest arc index with negative reduced cost) taking over during long runs
of degenerate pivots so that the method terminates.

Phase I starts from the northwest-corner basis and minimizes the flow on
forbidden arcs.  Phase II treats forbidden arcs as variables with upper bound
zero: they never enter, and a forbidden basic arc on the increasing side of a
cycle blocks the pivot and leaves the basis.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible

ENTERING_RULES = ("dantzig", "bland")
# consecutive degenerate pivots before Dantzig pricing falls back to Bland
DEGENERATE_SWITCH = 50


@dataclass(frozen=True)
class TransportSolution:
    flow: np.ndarray  # (rows, cols) dense
    cost: float
    iterations: int


class _Tree:
    """Basis arcs with flows; row nodes 0..m-1, column nodes m..m+n-1."""

    def __init__(self, m: int, n: int, arcs: list[tuple[int, int]], flows: list[float]):
        self.m, self.n = m, n
        self.arcs = list(arcs)
        self.flow = list(flows)

    def _walk(self, cost: np.ndarray):
        m, n = self.m, self.n
        adj: list[list[tuple[int, int]]] = [[] for _ in range(m + n)]
        for k, (i, j) in enumerate(self.arcs):
            adj[i].append((m + j, k))
            adj[m + j].append((i, k))
        parent = np.full(m + n, -1)
        parent_arc = np.full(m + n, -1)
        depth = np.zeros(m + n, dtype=int)
        pot = np.zeros(m + n)
        seen = np.zeros(m + n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            a = queue.popleft()
            for b, k in adj[a]:
                if not seen[b]:
                    seen[b] = True
                    parent[b], parent_arc[b], depth[b] = a, k, depth[a] + 1
                    i, j = self.arcs[k]
                    # u_i + v_j = c_ij
                    pot[b] = cost[i, j] - pot[a]
                    queue.append(b)
        if not seen.all():
            raise RuntimeError("basis is not a spanning tree")
        return parent, parent_arc, depth, pot

    def cycle(self, parent, parent_arc, depth, row: int, col: int) -> list[int]:
        """Tree arcs on the path from column ``col`` to row ``row``, in order."""
        a, b = self.m + col, row
        from_a, from_b = [], []
        while depth[a] > depth[b]:
            from_a.append(parent_arc[a])
            a = parent[a]
        while depth[b] > depth[a]:
            from_b.append(parent_arc[b])
            b = parent[b]
        while a != b:
            from_a.append(parent_arc[a])
            from_b.append(parent_arc[b])
            a, b = parent[a], parent[b]
        return from_a + from_b[::-1]


def _northwest_corner(supply: np.ndarray, demand: np.ndarray) -> tuple[list, list]:
    s, d = supply.copy(), demand.copy()
    m, n = len(s), len(d)
    i = j = 0
    arcs, flows = [], []
    while i < m and j < n:
        q = min(s[i], d[j])
        arcs.append((i, j))
        flows.append(q)
        s[i] -= q
        d[j] -= q
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return arcs, flows


def _run(
    tree: _Tree, cost: np.ndarray, blocked: np.ndarray, eps: float, max_iters: int, rule: str
) -> int:
    m, n = tree.m, tree.n
    iterations = 0
    degenerate_run = 0
    while True:
        parent, parent_arc, depth, pot = tree._walk(cost)
        reduced = cost - pot[:m, None] - pot[None, m:]
        reduced[blocked] = 0.0
        for i, j in tree.arcs:
            reduced[i, j] = 0.0
        candidates = np.flatnonzero(reduced.ravel() < -eps)
        if len(candidates) == 0:
            return iterations
        iterations += 1
        if iterations > max_iters:
            raise RuntimeError("transportation simplex exceeded its iteration limit")
        if rule == "bland" or degenerate_run >= DEGENERATE_SWITCH:
            pick = int(candidates[0])
        else:
            pick = int(candidates[np.argmin(reduced.ravel()[candidates])])
        i, j = divmod(pick, n)
        path = tree.cycle(parent, parent_arc, depth, i, j)
        # path arcs alternate: decrease, increase, decrease, ...
        best = None
        for pos, k in enumerate(path):
            a_i, a_j = tree.arcs[k]
            if pos % 2 == 0:
                room = tree.flow[k]
            elif blocked[a_i, a_j]:
                room = -tree.flow[k]
            else:
                continue
            key = (max(room, 0.0), not blocked[a_i, a_j], a_i * n + a_j)
            if best is None or key < best[0]:
                best = (key, pos, k)
        (theta, _, _), _, leave = best
        degenerate_run = degenerate_run + 1 if theta <= 0.0 else 0
        for pos, k in enumerate(path):
            tree.flow[k] += -theta if pos % 2 == 0 else theta
        tree.arcs[leave] = (i, j)
        tree.flow[leave] = theta
        for k, (a_i, a_j) in enumerate(tree.arcs):
            if tree.flow[k] < 0.0 and tree.flow[k] > -eps:
                tree.flow[k] = 0.0


def solve_transport(
    cost: np.ndarray,
    supply: np.ndarray,
    demand: np.ndarray,
    forbidden: np.ndarray | None = None,
    balance_tol: float = 1e-9,
    max_iters: int = 1_000_000,
    rule: str = "dantzig",
) -> TransportSolution:
    """Exact minimum-cost balanced transport with optional forbidden arcs.

    ``rule="dantzig"`` prices by most negative reduced cost and switches to
    Bland's rule after a run of degenerate pivots; ``rule="bland"`` uses
    Bland's rule throughout.
    """
    if rule not in ENTERING_RULES:
        raise ValueError(f"rule must be one of {ENTERING_RULES}")
    cost = np.asarray(cost, dtype=float)
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    m, n = cost.shape
    if supply.shape != (m,) or demand.shape != (n,):
        raise ValueError("supply/demand shapes do not match the cost matrix")
    if np.any(supply < 0) or np.any(demand < 0):
        raise ValueError("supplies and demands must be nonnegative")
    total = supply.sum()
    if abs(total - demand.sum()) > balance_tol * max(1.0, total):
        raise Infeasible(f"unbalanced problem: supply {total!r} vs demand {demand.sum()!r}")
    demand = demand * (total / demand.sum()) if demand.sum() > 0 else demand
    forbidden = np.zeros((m, n), dtype=bool) if forbidden is None else np.asarray(forbidden, dtype=bool)
    if np.any(~forbidden & ~np.isfinite(cost)):
        raise ValueError("allowed arcs need finite costs")
    eps = 1e-13 * max(1.0, float(np.max(np.abs(np.where(forbidden, 0.0, cost)))))
    flow_eps = 1e-12 * max(1.0, total)

    tree = _Tree(m, n, *_northwest_corner(supply, demand))
    none = np.zeros((m, n), dtype=bool)
    iters = 0
    if forbidden.any():
        iters += _run(tree, forbidden.astype(float), none, 1e-12, max_iters, rule)
        bad = sum(f for (i, j), f in zip(tree.arcs, tree.flow) if forbidden[i, j])
        if bad > flow_eps:
            raise Infeasible(f"no feasible plan avoids forbidden arcs (residual {bad:.3g})")
        for k, (i, j) in enumerate(tree.arcs):
            if forbidden[i, j]:
                tree.flow[k] = 0.0
    phase2 = np.where(forbidden, 0.0, cost)
    iters += _run(tree, phase2, forbidden, eps, max_iters, rule)

    flow = np.zeros((m, n))
    for (i, j), f in zip(tree.arcs, tree.flow):
        flow[i, j] += max(f, 0.0)
    return TransportSolution(flow, float(np.sum(flow[~forbidden] * cost[~forbidden])), iters)
