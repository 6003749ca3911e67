"""Checks that discrete curvature data can be realized by a convex polytope.

The data (x_i, mu_i) must have total mass sigma(S^n), positive masses, no
closed hemisphere containing all supported directions, and must satisfy the
strict cone inequality

    sum_{x_i not in V} mu_i > sigma((S^n cap V)^*)

for every proper convex cone V.  Rays and half-spaces are always checked;
cones spanned by subsets of the directions are enumerated for small K.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls

from . import sphgeom
from .errors import TooLarge
from .polytope import ProblemInstance

MASS_TOL = 1e-9
VERTEX_MARGIN = 1e-12
CONE_MARGIN = 1e-10


@dataclass
class ConeCheck:
    status: str = "NotRun"  # NotRun | Passed | FailedWithCone
    generators: Optional[list[int]] = None
    subsets_checked: int = 0
    margin: Optional[float] = None


@dataclass
class AdmissibilityReport:
    mass_balance_ok: bool
    mass_residual: float
    positivity_ok: bool
    nonpositive_indices: list[int]
    hemisphere_ok: bool
    hemisphere_witness: Optional[list[float]]
    vertex_bound_ok: bool
    vertex_bound_worst: int
    cone_check: ConeCheck = field(default_factory=ConeCheck)

    @property
    def ok(self) -> bool:
        return (
            self.mass_balance_ok
            and self.positivity_ok
            and self.hemisphere_ok
            and self.vertex_bound_ok
            and self.cone_check.status != "FailedWithCone"
        )

    def failures(self) -> list[str]:
        names = []
        if not self.mass_balance_ok:
            names.append("mass_balance")
        if not self.positivity_ok:
            names.append("positivity")
        if not self.hemisphere_ok:
            names.append("hemisphere")
        if not self.vertex_bound_ok:
            names.append("vertex_bound")
        if self.cone_check.status == "FailedWithCone":
            names.append("cone_condition")
        return names

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def check_mass_balance(instance: ProblemInstance) -> tuple[bool, float]:
    residual = abs(float(np.sum(instance.mu)) - instance.sigma)
    return residual <= MASS_TOL, residual


def check_positivity(instance: ProblemInstance) -> tuple[bool, list[int]]:
    bad = [int(i) for i in np.flatnonzero(instance.mu <= 0)]
    return not bad, bad


def check_hemisphere(instance: ProblemInstance) -> tuple[bool, Optional[np.ndarray]]:
    """Is the origin strictly inside the hull of the supported directions?

    The cone {u : <x_i, u> <= 0 for all supported i} is trivial exactly when
    the origin is interior.  Each coordinate of u is maximized and minimized
    over the cone intersected with a box; any nonzero optimum is a witness.
    """
    X = instance.points[instance.mu > 0]
    d = instance.dimension + 1
    if len(X) == 0:
        return False, np.eye(d)[-1]
    best, witness = 0.0, None
    for k in range(d):
        for sign in (1.0, -1.0):
            c = np.zeros(d)
            c[k] = -sign
            res = linprog(c, A_ub=X, b_ub=np.zeros(len(X)), bounds=[(-1, 1)] * d, method="highs")
            if res.status == 0 and -res.fun > best + 1e-12:
                best, witness = -res.fun, res.x
    if witness is None or best <= 1e-9:
        return True, None
    return False, _polish_witness(X, sphgeom.normalize(witness))


def _polish_witness(X: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Pick the witness most interior to the dual cone (max-min margin)."""
    d = X.shape[1]
    # maximize t subject to <x_i, u> + t <= 0, <u0, u> = 1, box bound on u
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A = np.hstack([X, np.ones((len(X), 1))])
    res = linprog(
        c,
        A_ub=A,
        b_ub=np.zeros(len(X)),
        A_eq=np.append(u, 0.0)[None, :],
        b_eq=[1.0],
        bounds=[(-2, 2)] * d + [(0, None)],
        method="highs",
    )
    if res.status == 0:
        cand = sphgeom.normalize(res.x[:d])
        if np.all(X @ cand <= 1e-12):
            return cand
    return u


def check_vertex_bound(instance: ProblemInstance) -> tuple[bool, int]:
    """mu_i < sigma(S^n)/2 for every i; returns the index of the largest mass."""
    worst = int(np.argmax(instance.mu))
    return bool(instance.mu[worst] < instance.sigma / 2 - VERTEX_MARGIN), worst


def _min_norm_point(S: np.ndarray) -> np.ndarray:
    """Point of conv(S) closest to the origin (weighted nnls formulation)."""
    big = 1e3
    A = np.vstack([S.T, big * np.ones(len(S))])
    b = np.append(np.zeros(S.shape[1]), big)
    lam, _ = nnls(A, b)
    return S.T @ lam


def pointed_centre(S: np.ndarray) -> Optional[np.ndarray]:
    """Unit u with <s, u> > 0 for all rows s, or None if no open hemisphere holds S."""
    p = _min_norm_point(S)
    norm = np.linalg.norm(p)
    if norm <= 1e-9:
        return None
    u = p / norm
    return u if np.all(S @ u > 1e-12) else None


def _spherical_hull_perimeter(S: np.ndarray, u: np.ndarray) -> float:
    """Perimeter of the spherical hull of points in the open hemisphere about u.

    A geodesic segment counts twice (the hull is a degenerate 2-gon).
    """
    if len(S) == 1:
        return 0.0
    if S.shape[1] == 2:
        ang = np.arctan2(S @ np.array([-u[1], u[0]]), S @ u)
        return float(2.0 * (ang.max() - ang.min()))
    # gnomonic projection about u maps geodesics to lines
    e1 = sphgeom.normalize(np.cross(u, np.eye(3)[np.argmin(np.abs(u))]))
    e2 = np.cross(u, e1)
    proj = np.stack([S @ e1, S @ e2], axis=1) / (S @ u)[:, None]
    ring = S[_planar_hull(proj)]
    if len(ring) == 1:
        return 0.0
    nxt = np.roll(ring, -1, axis=0)
    return float(np.sum(np.arccos(np.clip(np.einsum("ij,ij->i", ring, nxt), -1.0, 1.0))))


def _planar_hull(p: np.ndarray) -> list[int]:
    order = sorted(range(len(p)), key=lambda k: (p[k, 0], p[k, 1]))
    if len(order) <= 2:
        return order

    def cross(o, a, b):
        return (p[a, 0] - p[o, 0]) * (p[b, 1] - p[o, 1]) - (p[a, 1] - p[o, 1]) * (p[b, 0] - p[o, 0])

    def chain(seq):
        out: list[int] = []
        for k in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], k) <= 1e-14:
                out.pop()
            out.append(k)
        return out

    lower, upper = chain(order), chain(order[::-1])
    return lower[:-1] + upper[:-1]


def dual_cone_measure(generators: np.ndarray) -> Optional[float]:
    """sigma of the spherical section of the dual of a pointed cone(generators).

    The dual section is the polar polygon: its measure is pi minus the arc
    length on S^1 and 2*pi minus the perimeter on S^2.  Returns None when the
    cone is not pointed (its dual section is then null or the cone is the
    whole space).
    """
    S = np.atleast_2d(generators)
    u = pointed_centre(S)
    if u is None:
        return None
    per = _spherical_hull_perimeter(S, u)
    return (np.pi - per / 2.0) if S.shape[1] == 2 else (2.0 * np.pi - per)


def _in_cone(S: np.ndarray, x: np.ndarray) -> bool:
    _, resid = nnls(S.T, x)
    return resid <= 1e-10


def check_cone_condition_exhaustive(instance: ProblemInstance, max_K: int = 12) -> ConeCheck:
    """Cone inequality for every pointed cone spanned by a subset of directions.

    Cones that are not pointed are skipped: if one of them violated the
    inequality, all supported directions would lie in a closed half-space,
    which :func:`check_hemisphere` reports.  Supersets of a non-pointed
    subset are never pointed, so they are pruned.
    """
    K = instance.K
    if K > max_K:
        raise TooLarge(f"exhaustive cone check limited to K <= {max_K}, got {K}")
    X, mu = instance.points, instance.mu
    checked = 0
    worst_margin = np.inf
    frontier = [()]
    while frontier:
        grown = []
        for base in frontier:
            for k in range(base[-1] + 1 if base else 0, K):
                subset = base + (k,)
                S = X[list(subset)]
                dual = dual_cone_measure(S)
                if dual is None:
                    continue
                grown.append(subset)
                checked += 1
                outside = sum(mu[j] for j in range(K) if j not in subset and not _in_cone(S, X[j]))
                margin = outside - dual
                worst_margin = min(worst_margin, margin)
                if margin <= CONE_MARGIN:
                    return ConeCheck("FailedWithCone", list(subset), checked, float(margin))
        frontier = grown
    return ConeCheck("Passed", None, checked, float(worst_margin))


def validate(instance: ProblemInstance, exhaustive: bool = True, max_K: int = 12) -> AdmissibilityReport:
    mass_ok, residual = check_mass_balance(instance)
    pos_ok, bad = check_positivity(instance)
    hemi_ok, witness = check_hemisphere(instance)
    vb_ok, worst = check_vertex_bound(instance)
    report = AdmissibilityReport(
        mass_ok,
        residual,
        pos_ok,
        bad,
        hemi_ok,
        None if witness is None else [float(w) for w in witness],
        vb_ok,
        worst,
    )
    if exhaustive and instance.K <= max_K:
        report.cone_check = check_cone_condition_exhaustive(instance, max_K)
    return report
