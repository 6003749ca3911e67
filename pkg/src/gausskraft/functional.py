"""The discrete functional Q_K in log-radial coordinates.

For log radii r and masses mu,

    Q(r) = int_{S^n} log h(N) dsigma(N) - sum_i mu_i r_i,
    log h(N) = max_i [r_i + log <x_i, N>],

which is convex in r.  It is evaluated through the normal cells C_i of the
polytope:

    Q(r) = sum_i r_i (|C_i| - mu_i) + sum_i int_{C_i} log <x_i, N> dsigma(N),

and its gradient is |C_i| - mu_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sphgeom
from .polytope import ProblemInstance, RadialPolytope, build


@dataclass(frozen=True)
class EvalReport:
    Q: float
    cell_areas: np.ndarray
    log_dot_integrals: np.ndarray
    gradient: np.ndarray
    polytope: RadialPolytope

    @property
    def residual(self) -> float:
        """Largest cell-area mismatch relative to the sphere measure."""
        return float(np.max(np.abs(self.gradient)) / self.polytope.instance.sigma)


def cell_integrals(P: RadialPolytope, tol: float = sphgeom.DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Areas of the normal cells and the integrals of log<x_i, N> over them."""
    P.require_origin()
    inst = P.instance
    K = inst.K
    areas = np.zeros(K)
    integrals = np.zeros(K)
    cells = P.normal_cells()
    if inst.dimension == 1:
        for c in cells:
            if not c.empty:
                areas[c.index] = c.area
                integrals[c.index] = sphgeom.arc_log_dot(
                    sphgeom.angle(inst.points[c.index]), c.region.start, c.region.length
                )
        return areas, integrals
    owners, v1, v2 = [], [], []
    for c in cells:
        if c.empty:
            continue
        areas[c.index] = c.area
        corners = c.region.vertices
        owners.append(np.full(len(corners), c.index))
        v1.append(corners)
        v2.append(np.roll(corners, -1, axis=0))
    if owners:
        owner = np.concatenate(owners)
        fans = sphgeom.log_dot_fans(inst.points[owner], np.concatenate(v1), np.concatenate(v2), tol / K)
        np.add.at(integrals, owner, fans)
    return areas, integrals


def evaluate(instance: ProblemInstance, log_radii, tol: float = sphgeom.DEFAULT_TOL) -> EvalReport:
    """Q, cell areas, log-cosine integrals and gradient at ``log_radii``."""
    P = build(instance, log_radii)
    areas, integrals = cell_integrals(P, tol)
    r = P.log_radii
    grad = areas - instance.mu
    Q = float(np.dot(r, grad) + np.sum(integrals))
    return EvalReport(Q, areas, integrals, grad, P)


def value(instance: ProblemInstance, log_radii, tol: float = sphgeom.DEFAULT_TOL) -> float:
    return evaluate(instance, log_radii, tol).Q


def gradient(instance: ProblemInstance, log_radii) -> np.ndarray:
    """Subgradient |C_i| - mu_i; needs only cell areas."""
    P = build(instance, log_radii)
    P.require_origin()
    return np.array([c.area for c in P.normal_cells()]) - instance.mu


def gauge_project(instance: ProblemInstance, log_radii) -> np.ndarray:
    """Shift along the all-ones vector so that sum_i mu_i r_i = 0."""
    r = np.asarray(log_radii, dtype=float)
    mu = instance.mu
    return r - np.dot(mu, r) / np.sum(mu)


def log_support(instance: ProblemInstance, log_radii, normals: np.ndarray) -> np.ndarray:
    """log h(N) = max_i [r_i + log <x_i, N>] evaluated pointwise."""
    dots = np.atleast_2d(normals) @ instance.points.T
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(dots > 0, np.asarray(log_radii)[None, :] + np.log(np.where(dots > 0, dots, 1.0)), -np.inf)
    return terms.max(axis=1)


def direct_value(instance: ProblemInstance, log_radii, level: int = 2, tol: float = 1e-6) -> float:
    """Q from a global quadrature of log h over a sphere partition.

    Independent of the polytope and cell machinery; intended as a check.
    """
    r = np.asarray(log_radii, dtype=float)
    part = sphgeom.geodesic_partition(level, instance.dimension)

    def f(N):
        return log_support(instance, r, N)

    if instance.dimension == 1:
        total = sum(sphgeom.integrate(f, part.region(k), tol / len(part)) for k in range(len(part)))
    else:
        total = float(np.sum(sphgeom.integrate_triangles(f, part.triangles(), tol, max_depth=16)))
    return float(total - np.dot(instance.mu, r))


def finite_difference_gradient(
    instance: ProblemInstance, log_radii, eps: float = 1e-5, tol: float = 1e-13
) -> np.ndarray:
    """Central differences of Q along each coordinate."""
    from .parallel import pmap

    r = np.asarray(log_radii, dtype=float)
    K = instance.K
    shifts = [(k, s) for k in range(K) for s in (1.0, -1.0)]

    def shifted(ks):
        k, s = ks
        x = r.copy()
        x[k] += s * eps
        return value(instance, x, tol)

    vals = np.array(pmap(shifted, shifts)).reshape(K, 2)
    return (vals[:, 0] - vals[:, 1]) / (2.0 * eps)


def gradient_error(instance: ProblemInstance, log_radii, eps: float = 1e-5, tol: float = 1e-13) -> float:
    """max|fd - grad| / max(max|grad|, 1e-3) at one point."""
    g = gradient(instance, log_radii)
    fd = finite_difference_gradient(instance, log_radii, eps, tol)
    return float(np.max(np.abs(fd - g)) / max(float(np.max(np.abs(g))), 1e-3))
