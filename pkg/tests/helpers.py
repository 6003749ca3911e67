"""Instance generators and hull-free oracles shared by the tests."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import spence

from gausskraft.admissibility import validate
from gausskraft.functional import evaluate
from gausskraft.polytope import ProblemInstance

FOUR_PI = 4.0 * np.pi
TWO_PI = 2.0 * np.pi

OCTAHEDRON = np.vstack([np.eye(3), -np.eye(3)])
TETRAHEDRON = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3.0)
# high-precision value of int_{S^2} log max_i |N_i| dsigma (48-fold symmetric
# reduction, inner integral in closed form, outer by mpmath at 30 digits)
OCTAHEDRON_Q = -2.41695455026263670363854799037


def octahedron() -> ProblemInstance:
    return ProblemInstance(2, OCTAHEDRON, np.full(6, TWO_PI / 3))


def circle_points(angles) -> np.ndarray:
    a = np.asarray(angles, dtype=float)
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def random_masses(rng, K: int, total: float, low=0.5, high=1.5) -> np.ndarray:
    mu = rng.uniform(low, high, K)
    return mu * (total / mu.sum())


def random_admissible(rng, K: int = 12, dimension: int = 2, exhaustive: bool = False) -> ProblemInstance:
    """Random directions and masses that pass the admissibility checks."""
    sigma = FOUR_PI if dimension == 2 else TWO_PI
    while True:
        if dimension == 2:
            X = rng.normal(size=(K, 3))
        else:
            X = circle_points(rng.uniform(0, TWO_PI, K))
        inst = ProblemInstance(dimension, X, random_masses(rng, K, sigma))
        if validate(inst, exhaustive=exhaustive and K <= 12).ok:
            return inst


def vertex_bound_violator(rng, K: int = 12, dimension: int = 2) -> ProblemInstance:
    """mu_0 above half the sphere measure, other masses balanced."""
    sigma = FOUR_PI if dimension == 2 else TWO_PI
    while True:
        X = rng.normal(size=(K, 3)) if dimension == 2 else circle_points(rng.uniform(0, TWO_PI, K))
        big = rng.uniform(0.52, 0.65) * sigma
        mu = np.concatenate([[big], random_masses(rng, K - 1, sigma - big)])
        inst = ProblemInstance(dimension, X, mu)
        report = validate(inst, exhaustive=False)
        if report.hemisphere_ok and report.mass_balance_ok and not report.vertex_bound_ok:
            return inst


def random_polytope(rng, K: int, spread: float = 0.1, dimension: int = 2):
    """(instance with mu = Gauss cells, log radii) where every point is a hull vertex."""
    while True:
        X = rng.normal(size=(K, 3)) if dimension == 2 else circle_points(rng.uniform(0, TWO_PI, K))
        r = rng.uniform(-spread, spread, K)
        base = ProblemInstance(dimension, X, np.ones(K))
        try:
            rep = evaluate(base, r)
        except Exception:
            continue
        if rep.polytope.hull_vertex.all() and np.all(rep.cell_areas > 1e-3):
            return base.with_mu(rep.cell_areas), r


# ---------------------------------------------------------------------------
# hull-free evaluation of Q on S^1


def _log_cos_primitive(t):
    """int_0^t log cos s ds for |t| <= pi/2, via Cl2(x) = Im Li2(e^{ix})."""
    t = np.asarray(t, dtype=float)
    x = np.pi - 2.0 * t
    cl2 = np.imag(spence(1.0 - np.exp(1j * x)))
    return 0.5 * cl2 - t * np.log(2.0)


def circle_Q(angles, mu, log_radii) -> float:
    """Q on S^1 from the upper envelope of r_i + log cos(theta - theta_i).

    All pairwise crossings and the +-pi/2 points of every atom split the
    circle into pieces on which one atom attains the maximum.
    """
    th = np.asarray(angles, dtype=float)
    r = np.asarray(log_radii, dtype=float)
    K = len(th)
    cuts = [(t + s * np.pi / 2) % TWO_PI for t in th for s in (1, -1)]
    for i, j in itertools.combinations(range(K), 2):
        a = np.exp(r[i]) * np.cos(th[i]) - np.exp(r[j]) * np.cos(th[j])
        b = np.exp(r[i]) * np.sin(th[i]) - np.exp(r[j]) * np.sin(th[j])
        base = np.arctan2(a, -b)
        cuts += [base % TWO_PI, (base + np.pi) % TWO_PI]
    lo = np.unique(np.array(cuts))
    hi = np.append(lo[1:], lo[0] + TWO_PI)
    keep = hi - lo > 1e-15
    lo, hi = lo[keep], hi[keep]
    mid = 0.5 * (lo + hi)
    c = np.cos(mid[:, None] - th[None, :])
    with np.errstate(divide="ignore"):
        vals = np.where(c > 0, r[None, :] + np.log(np.where(c > 0, c, 1.0)), -np.inf)
    win = np.argmax(vals, axis=1)
    # offsets of each piece relative to its winning atom, wrapped to (-pi, pi]
    a0 = (lo - th[win] + np.pi) % TWO_PI - np.pi
    a1 = a0 + (hi - lo)
    total = float(np.sum(r[win] * (hi - lo) + _log_cos_primitive(a1) - _log_cos_primitive(a0)))
    return total - float(np.dot(mu, r))


def grid_minimize_circle(angles, mu, start_step=0.25, final_step=1e-4):
    """Grid pattern search over gauge-fixed log radii (free coordinates 0..K-2)."""
    mu = np.asarray(mu, dtype=float)
    K = len(mu)

    def full(z):
        return np.append(z, -np.dot(mu[:-1], z) / mu[-1])

    def q(z):
        return circle_Q(angles, mu, full(z))

    moves = [np.array(m) for m in itertools.product((-1, 0, 1), repeat=K - 1) if any(m)]
    z = np.zeros(K - 1)
    best = q(z)
    step = start_step
    while True:
        improved = True
        while improved:
            improved = False
            for m in moves:
                cand = z + step * m
                val = q(cand)
                if val < best - 1e-15:
                    z, best, improved = cand, val, True
        if step <= final_step:
            return full(z), best
        step /= 2.0
