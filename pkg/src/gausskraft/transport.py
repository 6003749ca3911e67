"""Transport view of the problem: the Gauss-map plan and a discrete LP.

The semi-discrete plan sends the atom at x_i onto its normal cell with cost
log<x_i, N>.  Its total cost C differs from Q at the same log radii by the
algebraic gap sum_i r_i (|C_i| - mu_i).  The LP oracle replaces the sphere by
weighted sample normals and maximizes the same cost exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from . import sphgeom
from .errors import Infeasible
from .functional import cell_integrals, evaluate
from .polytope import NormalCell, ProblemInstance, RadialPolytope
from .simplex import solve_transport


@dataclass(frozen=True)
class TransportPlan:
    instance: ProblemInstance
    cells: tuple[NormalCell, ...]
    cost_terms: np.ndarray

    @property
    def cell_areas(self) -> np.ndarray:
        return np.array([c.area for c in self.cells])

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.cost_terms))

    def source_residual(self) -> float:
        """Largest mismatch between cell areas and masses."""
        return float(np.max(np.abs(self.cell_areas - self.instance.mu)))


def plan_from_polytope(P: RadialPolytope, tol: float = sphgeom.DEFAULT_TOL) -> TransportPlan:
    """The plan induced by the Gauss map of P."""
    P.require_origin()
    _, integrals = cell_integrals(P, tol)
    return TransportPlan(P.instance, tuple(P.normal_cells()), integrals)


def duality_gap(instance: ProblemInstance, P: RadialPolytope, tol: float = sphgeom.DEFAULT_TOL) -> float:
    """Q at the log radii of P minus the cost of its Gauss-map plan."""
    P.require_origin()
    plan = plan_from_polytope(P, tol)
    Q = evaluate(instance, P.log_radii, tol).Q
    return float(Q - plan.total_cost)


@dataclass(frozen=True)
class DiscretePlan:
    """Sparse coupling between atoms and sample normals."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    K: int

    def dense(self) -> np.ndarray:
        out = np.zeros((self.K, len(self.weights)))
        np.add.at(out, (self.rows, self.cols), self.mass)
        return out

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, self.mass, minlength=self.K)

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, self.mass, minlength=len(self.weights))

    def by_source(self) -> dict[int, list[tuple[int, float]]]:
        out: dict[int, list[tuple[int, float]]] = {i: [] for i in range(self.K)}
        for i, j, m in zip(self.rows, self.cols, self.mass):
            out[int(i)].append((int(j), float(m)))
        return out

    def to_json(self) -> str:
        triplets = [[int(i), int(j), float(m)] for i, j, m in zip(self.rows, self.cols, self.mass)]
        return json.dumps({"K": self.K, "M": len(self.weights), "triplets": triplets})


@dataclass(frozen=True)
class OracleResult:
    value: float
    plan: DiscretePlan
    iterations: int


def sample_normals(dimension: int, M: int, seed: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Representatives and cell areas of the partition with M cells.

    A seed applies a random rotation to the whole partition.
    """
    counts = [(20 * 4**l if dimension == 2 else 8 * 2**l) for l in range(12)]
    if M not in counts:
        raise ValueError(f"sample count must be a partition size, one of {counts[:6]}...")
    part = sphgeom.geodesic_partition(counts.index(M), dimension)
    normals, weights = part.representatives.copy(), part.areas.copy()
    if seed is not None:
        rng = np.random.default_rng(seed)
        if dimension == 2:
            normals = Rotation.random(random_state=rng).apply(normals)
        else:
            a = rng.uniform(0.0, sphgeom.TWO_PI)
            c, s = np.cos(a), np.sin(a)
            normals = normals @ np.array([[c, s], [-s, c]])
    return normals, weights


def lp_oracle(instance: ProblemInstance, M: int, seed: Optional[int] = None) -> OracleResult:
    """Exact maximum of sum g_ij log<x_i, N_j> over couplings of mu and weights."""
    if M < instance.K:
        raise ValueError("need at least as many samples as atoms")
    normals, weights = sample_normals(instance.dimension, M, seed)
    return lp_oracle_on(instance, normals, weights)


def lp_oracle_on(instance: ProblemInstance, normals: np.ndarray, weights: np.ndarray) -> OracleResult:
    """LP oracle on explicit sample normals and weights."""
    dots = instance.points @ np.asarray(normals, dtype=float).T
    forbidden = dots <= 0
    with np.errstate(divide="ignore"):
        gain = np.where(forbidden, 0.0, np.log(np.where(forbidden, 1.0, dots)))
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - instance.mu.sum()) > 1e-9 * max(1.0, instance.mu.sum()):
        raise Infeasible("sample weights and masses have different totals")
    sol = solve_transport(-gain, instance.mu, weights, forbidden)
    flow = sol.flow
    rows, cols = np.nonzero(flow)
    plan = DiscretePlan(rows, cols, flow[rows, cols], np.asarray(normals, dtype=float), weights, instance.K)
    return OracleResult(float(np.sum(flow * gain)), plan, sol.iterations)
