"""Spherical geometry kernel for S^1 and S^2.

Points of the sphere are plain numpy arrays of unit norm.  Regions are either
geodesic polygons on S^2 (:class:`SphericalPolygon`) or circular arcs on S^1
(:class:`Arc`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.special import spence

from .errors import DegeneratePolygon, NonPositiveDot, ToleranceNotReached, ZeroVector

TWO_PI = 2.0 * np.pi
MERGE_ANGLE = 1e-10
DEFAULT_TOL = 1e-10
MAX_ACTIVE_TRIANGLES = 2_000_000


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm <= 1e-300:
        raise ZeroVector(f"cannot normalize vector of norm {norm!r}")
    return v / norm


def sphere_measure(n: int) -> float:
    """Total measure of S^n: 2*pi for the circle, 4*pi for the 2-sphere."""
    if n == 1:
        return TWO_PI
    if n == 2:
        return 4.0 * np.pi
    raise ValueError(f"unsupported sphere dimension {n}")


def angle(v: np.ndarray) -> float:
    """Polar angle of a planar vector in [0, 2*pi)."""
    return float(np.arctan2(v[1], v[0]) % TWO_PI)


def from_angle(theta: float) -> np.ndarray:
    return np.array([np.cos(theta), np.sin(theta)])


@dataclass(frozen=True)
class SphericalPolygon:
    """Geodesic polygon on S^2, vertices counterclockwise seen from outside."""

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.atleast_2d(np.asarray(self.vertices, dtype=float)))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def dimension(self) -> int:
        return 2


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc of S^1 from ``start`` through ``length`` radians."""

    start: float
    length: float

    @classmethod
    def between(cls, a: np.ndarray, b: np.ndarray) -> "Arc":
        """Arc running counterclockwise from unit vector ``a`` to ``b``."""
        t0, t1 = angle(a), angle(b)
        return cls(t0, (t1 - t0) % TWO_PI)

    @property
    def end(self) -> float:
        return self.start + self.length

    @property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        return from_angle(self.start), from_angle(self.end)

    @property
    def dimension(self) -> int:
        return 1


Region = Union[SphericalPolygon, Arc]


# ---------------------------------------------------------------------------
# areas


def triangle_area(a, b, c) -> np.ndarray:
    """Signed area of geodesic triangles (Oosterom-Strackee formula).

    Broadcasts over leading axes; positive for counterclockwise triangles.
    """
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    det = np.einsum("...i,...i->...", a, np.cross(b, c))
    denom = 1.0 + np.einsum("...i,...i->...", a, b) + np.einsum("...i,...i->...", b, c) \
        + np.einsum("...i,...i->...", c, a)
    return 2.0 * np.arctan2(det, denom)


def interior_angles(vertices: np.ndarray) -> np.ndarray:
    """Interior angles in (0, 2*pi) of a counterclockwise geodesic polygon."""
    b = vertices
    a = np.roll(vertices, 1, axis=0)
    c = np.roll(vertices, -1, axis=0)
    da = a - b
    dc = c - b
    ta = da - np.einsum("ij,ij->i", da, b)[:, None] * b
    tc = dc - np.einsum("ij,ij->i", dc, b)[:, None] * b
    sin_part = np.einsum("ij,ij->i", b, np.cross(tc, ta))
    cos_part = np.einsum("ij,ij->i", tc, ta)
    return np.arctan2(sin_part, cos_part) % TWO_PI


def polygon_area(region: Region) -> float:
    """Measure of a region: spherical excess on S^2, arc length on S^1."""
    if isinstance(region, Arc):
        if not 0.0 <= region.length <= TWO_PI:
            raise DegeneratePolygon(f"arc length {region.length} outside [0, 2pi]")
        return float(region.length)
    v = region.vertices
    m = len(v)
    if m < 3:
        raise DegeneratePolygon(f"polygon needs at least 3 vertices, got {m}")
    gaps = np.linalg.norm(v - np.roll(v, -1, axis=0), axis=1)
    if np.any(gaps <= MERGE_ANGLE):
        raise DegeneratePolygon("consecutive vertices coincide")
    excess = float(np.sum(interior_angles(v)) - (m - 2) * np.pi)
    if excess < -1e-12 or excess > 4.0 * np.pi:
        raise DegeneratePolygon(f"self-intersecting ordering (excess {excess})")
    return max(excess, 0.0)


# ---------------------------------------------------------------------------
# one-dimensional Gauss-Legendre machinery


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
    order: int = 16,
    max_depth: int = 40,
) -> np.ndarray:
    """Integrate a batch of 1-D integrands over ``[lo[k], hi[k]]``.

    ``f(idx, t)`` evaluates integrand ``idx[k]`` at the points ``t[k, :]``.
    Intervals are bisected until the one- and two-panel estimates agree to
    the panel's share of ``tol`` (or to rounding level); the returned array holds one integral per
    batch entry.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    nodes, weights = _gauss_legendre(order)
    out = np.zeros(lo.shape[0])
    if lo.size == 0:
        return out

    def panel(idx, a, b):
        t = a[:, None] + (b - a)[:, None] * nodes[None, :]
        return (b - a) * (f(idx, t) @ weights)

    idx = np.arange(lo.size)
    a, b = lo, hi
    local_tol = np.full(lo.size, tol / lo.size)
    whole = panel(idx, a, b)
    for _ in range(max_depth):
        mid = 0.5 * (a + b)
        left = panel(idx, a, mid)
        right = panel(idx, mid, b)
        refined = left + right
        # a few ulps of the panel value is as close as the estimates can get
        floor = 8.0 * np.finfo(float).eps * np.abs(refined)
        done = np.abs(refined - whole) <= np.maximum(local_tol, floor)
        np.add.at(out, idx[done], refined[done])
        keep = ~done
        if not keep.any():
            return out
        idx = np.concatenate([idx[keep], idx[keep]])
        a, b = np.concatenate([a[keep], mid[keep]]), np.concatenate([mid[keep], b[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        local_tol = np.concatenate([local_tol[keep], local_tol[keep]]) * 0.5
    raise ToleranceNotReached(f"adaptive quadrature did not reach tol={tol}")


# ---------------------------------------------------------------------------
# integral of log<apex, N>


def _radial_log_cos(c: np.ndarray) -> np.ndarray:
    """Closed form of int_0^theta log(cos t) sin t dt, with c = cos(theta)."""
    out = c - 1.0
    pos = c > 0.0
    out[pos] -= c[pos] * np.log(c[pos])
    return out


def log_dot_fans(apex: np.ndarray, v1: np.ndarray, v2: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Signed integrals of log<apex, N> over geodesic triangles (apex, v1, v2).

    Batched over the first axis.  In polar coordinates about the apex the
    radial integral is elementary, leaving a smooth azimuthal integral that
    is done by adaptive Gauss-Legendre.  The triangles must lie in the
    closed hemisphere centred at their apex.
    """
    apex = np.atleast_2d(apex)
    v1 = np.atleast_2d(v1)
    v2 = np.atleast_2d(v2)
    t1 = v1 - np.einsum("ij,ij->i", v1, apex)[:, None] * apex
    t2 = v2 - np.einsum("ij,ij->i", v2, apex)[:, None] * apex
    n1 = np.linalg.norm(t1, axis=1)
    n2 = np.linalg.norm(t2, axis=1)
    edge = np.cross(v1, v2)
    ne = np.linalg.norm(edge, axis=1)
    live = (n1 > 1e-15) & (n2 > 1e-15) & (ne > 1e-15)
    result = np.zeros(apex.shape[0])
    if not live.any():
        return result
    a = apex[live]
    e1 = t1[live] / n1[live, None]
    e2 = np.cross(a, e1)
    w = v2[live]
    sweep = np.arctan2(np.einsum("ij,ij->i", w, e2), np.einsum("ij,ij->i", w, e1))
    edge_n = edge[live] / ne[live, None]
    s = np.einsum("ij,ij->i", a, edge_n)
    p = np.einsum("ij,ij->i", e1, edge_n)
    q = np.einsum("ij,ij->i", e2, edge_n)

    def integrand(idx, phi):
        t = p[idx, None] * np.cos(phi) + q[idx, None] * np.sin(phi)
        r = np.hypot(s[idx, None], t)
        c = np.divide(np.abs(t), r, out=np.ones_like(t), where=r > 0.0)
        return _radial_log_cos(np.minimum(c, 1.0).ravel()).reshape(c.shape)

    lo = np.minimum(sweep, 0.0)
    hi = np.maximum(sweep, 0.0)
    vals = adaptive_gauss_legendre(integrand, lo, hi, tol)
    result[live] = np.sign(sweep) * vals
    return result


def clausen2(x) -> np.ndarray:
    """Clausen function Cl_2(x) = Im Li_2(exp(ix))."""
    x = np.asarray(x, dtype=float)
    return np.imag(spence(1.0 - np.exp(1j * x)))


def _log_cos_antiderivative(t) -> np.ndarray:
    """int_0^t log(cos s) ds for |t| <= pi/2."""
    t = np.asarray(t, dtype=float)
    return 0.5 * clausen2(np.pi - 2.0 * t) - t * np.log(2.0)


def arc_log_dot(apex_angle: float, start: float, length: float) -> float:
    """int over the arc [start, start+length] of log cos(phi - apex_angle)."""
    lo = (start - apex_angle + np.pi) % TWO_PI - np.pi
    hi = lo + length
    if lo < -np.pi / 2 - 1e-12 or hi > np.pi / 2 + 1e-12:
        raise NonPositiveDot("arc leaves the open half-circle around the apex")
    lo = max(lo, -np.pi / 2)
    hi = min(hi, np.pi / 2)
    return float(_log_cos_antiderivative(hi) - _log_cos_antiderivative(lo))


def integrate_log_dot(apex, region: Region, tol: float = DEFAULT_TOL) -> float:
    """Integral of log<apex, N> over ``region``; the integrand must stay finite."""
    apex = normalize(apex)
    if isinstance(region, Arc):
        return arc_log_dot(angle(apex), region.start, region.length)
    v = region.vertices
    if len(v) < 3:
        raise DegeneratePolygon("polygon needs at least 3 vertices")
    if np.any(v @ apex < -1e-14):
        raise NonPositiveDot("region leaves the hemisphere centred at the apex")
    m = len(v)
    w = np.roll(v, -1, axis=0)
    return float(np.sum(log_dot_fans(np.tile(apex, (m, 1)), v, w, tol)))


# ---------------------------------------------------------------------------
# generic quadrature with the 7-point triangle rule

_S15 = np.sqrt(15.0)
_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [(6 - _S15) / 21, (6 - _S15) / 21, (9 + 2 * _S15) / 21],
        [(6 - _S15) / 21, (9 + 2 * _S15) / 21, (6 - _S15) / 21],
        [(9 + 2 * _S15) / 21, (6 - _S15) / 21, (6 - _S15) / 21],
        [(6 + _S15) / 21, (6 + _S15) / 21, (9 - 2 * _S15) / 21],
        [(6 + _S15) / 21, (9 - 2 * _S15) / 21, (6 + _S15) / 21],
        [(9 - 2 * _S15) / 21, (6 + _S15) / 21, (6 + _S15) / 21],
    ]
)
_W7 = np.array(
    [9 / 40] + [(155 - _S15) / 1200] * 3 + [(155 + _S15) / 1200] * 3
) * 0.5


def _seven_point(f, tri: np.ndarray) -> np.ndarray:
    """7-point rule on gnomonically mapped triangles, tri has shape (T, 3, 3)."""
    pts = np.einsum("qk,tkd->tqd", _BARY, tri)
    norms = np.linalg.norm(pts, axis=2)
    jac = np.abs(np.einsum("ti,ti->t", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])))
    nodes = pts / norms[..., None]
    vals = np.asarray(f(nodes.reshape(-1, 3)), dtype=float).reshape(norms.shape)
    return jac * np.sum(vals * _W7 / norms**3, axis=1)


def _split4(tri: np.ndarray) -> np.ndarray:
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    def mid(x, y):
        m = x + y
        return m / np.linalg.norm(m, axis=1)[:, None]

    ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
    kids = np.stack(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ],
        axis=1,
    )
    return kids.reshape(-1, 3, 3)


def integrate_triangles(
    f: Callable[[np.ndarray], np.ndarray],
    triangles: np.ndarray,
    tol: float = 1e-9,
    max_depth: int = 12,
    relative: bool = False,
) -> np.ndarray:
    """Adaptive 7-point quadrature of ``f`` over each geodesic triangle.

    ``f`` maps an (m, 3) array of unit vectors to m values.  Returns one
    integral per input triangle.  With ``relative`` the tolerance is scaled
    by the magnitude of the first estimate.
    """
    triangles = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
    count = len(triangles)
    out = np.zeros(count)
    owner = np.arange(count)
    coarse = _seven_point(f, triangles)
    budget = tol * (np.maximum(np.abs(coarse), 1e-300) if relative else np.full(count, 1.0 / count))
    tri = triangles
    for _ in range(max_depth):
        kids = _split4(tri)
        fine = _seven_point(f, kids).reshape(-1, 4)
        total = fine.sum(axis=1)
        done = np.abs(total - coarse) <= budget
        np.add.at(out, owner[done], total[done])
        keep = ~done
        if not keep.any():
            return out
        tri = kids.reshape(-1, 4, 3, 3)[keep].reshape(-1, 3, 3)
        coarse = fine[keep].ravel()
        owner = np.repeat(owner[keep], 4)
        budget = np.repeat(budget[keep], 4) / 2.0
        if len(tri) > MAX_ACTIVE_TRIANGLES:
            break
    raise ToleranceNotReached(f"triangle quadrature did not reach tol={tol}")


def fan_triangles(poly: SphericalPolygon) -> np.ndarray:
    """Triangulate a convex polygon from its normalized vertex average."""
    v = poly.vertices
    centre = normalize(v.sum(axis=0))
    w = np.roll(v, -1, axis=0)
    return np.stack([np.tile(centre, (len(v), 1)), v, w], axis=1)


def integrate(f: Callable[[np.ndarray], np.ndarray], region: Region, tol: float = 1e-9) -> float:
    """Integral of ``f`` over a region by adaptive quadrature."""
    if isinstance(region, Arc):
        def g(idx, t):
            pts = np.stack([np.cos(t.ravel()), np.sin(t.ravel())], axis=1)
            return np.asarray(f(pts), dtype=float).reshape(t.shape)

        return float(adaptive_gauss_legendre(g, np.array([region.start]), np.array([region.end]), tol)[0])
    return float(np.sum(integrate_triangles(f, fan_triangles(region), tol)))


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class Partition:
    """Cells of a sphere partition.

    For S^2 ``faces`` index into ``vertices`` (geodesic triangles, children of
    face f at the next level are 4f..4f+3).  For S^1 cells are arcs and
    ``faces`` holds (start, length) rows.
    """

    dimension: int
    level: int
    vertices: np.ndarray
    faces: np.ndarray
    representatives: np.ndarray
    areas: np.ndarray

    def __len__(self) -> int:
        return len(self.representatives)

    def region(self, k: int) -> Region:
        if self.dimension == 1:
            start, length = self.faces[k]
            return Arc(float(start), float(length))
        return SphericalPolygon(self.vertices[self.faces[k]])

    @property
    def cells(self) -> list[tuple[Region, np.ndarray, float]]:
        return [(self.region(k), self.representatives[k], float(self.areas[k])) for k in range(len(self))]

    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]

    def diameters(self) -> np.ndarray:
        if self.dimension == 1:
            return self.faces[:, 1].copy()
        tri = self.triangles()
        edges = [(0, 1), (1, 2), (2, 0)]
        lengths = [
            np.arccos(np.clip(np.einsum("ij,ij->i", tri[:, i], tri[:, j]), -1.0, 1.0)) for i, j in edges
        ]
        return np.max(lengths, axis=0)

    def contains(self, k: int, point: np.ndarray, tol: float = 1e-12) -> bool:
        if self.dimension == 1:
            start, length = self.faces[k]
            return bool((angle(point) - start) % TWO_PI <= length + tol)
        a, b, c = self.vertices[self.faces[k]]
        dets = [np.dot(np.cross(p, q), point) for p, q in ((a, b), (b, c), (c, a))]
        return bool(min(dets) >= -tol)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    g = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, g, 0], [1, g, 0], [-1, -g, 0], [1, -g, 0],
            [0, -1, g], [0, 1, g], [0, -1, -g], [0, 1, -g],
            [g, 0, -1], [g, 0, 1], [-g, 0, -1], [-g, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return verts, faces


@lru_cache(maxsize=8)
def _geodesic_mesh(level: int) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = _icosahedron()
    verts = [tuple(v) for v in verts]
    faces = [tuple(f) for f in faces]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = normalize(np.add(verts[i], verts[j]))
                verts.append(tuple(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts), np.array(faces, dtype=int)


@lru_cache(maxsize=8)
def _partition(dimension: int, level: int) -> Partition:
    if dimension == 1:
        m = 8 * 2**level
        width = TWO_PI / m
        starts = np.arange(m) * width
        faces = np.stack([starts, np.full(m, width)], axis=1)
        reps = np.stack([np.cos(starts + width / 2), np.sin(starts + width / 2)], axis=1)
        return Partition(1, level, reps.copy(), faces, reps, np.full(m, width))
    verts, faces = _geodesic_mesh(level)
    tri = verts[faces]
    reps = tri.sum(axis=1)
    reps /= np.linalg.norm(reps, axis=1)[:, None]
    areas = triangle_area(tri[:, 0], tri[:, 1], tri[:, 2])
    return Partition(2, level, verts, faces, reps, areas)


def geodesic_partition(level: int, dimension: int = 2) -> Partition:
    """Icosahedral geodesic partition of S^2 (or uniform arcs of S^1).

    Level l has 20 * 4**l triangular cells on S^2 and 8 * 2**l arcs on S^1.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    return _partition(dimension, int(level))


def locate(partition: Partition, points: np.ndarray) -> np.ndarray:
    """Index of the partition cell containing each point."""
    points = np.atleast_2d(points)
    if partition.dimension == 1:
        width = TWO_PI / len(partition)
        ang = np.arctan2(points[:, 1], points[:, 0]) % TWO_PI
        return np.minimum((ang // width).astype(int), len(partition) - 1)
    base = _partition(2, 0)
    cell = _locate_in(base, np.arange(len(base)), points)
    for lvl in range(1, partition.level + 1):
        part = _partition(2, lvl)
        kids = 4 * cell[:, None] + np.arange(4)[None, :]
        cell = _locate_children(part, kids, points)
    return cell


def _inside_score(part: Partition, cells: np.ndarray, points: np.ndarray) -> np.ndarray:
    tri = part.vertices[part.faces[cells]]
    p = points[:, None, :] if cells.ndim == 2 else points
    dets = [
        np.einsum("...i,...i->...", np.cross(tri[..., i, :], tri[..., j, :]), p)
        for i, j in ((0, 1), (1, 2), (2, 0))
    ]
    return np.min(dets, axis=0)


def _locate_in(part: Partition, candidates: np.ndarray, points: np.ndarray) -> np.ndarray:
    cells = np.broadcast_to(candidates, (len(points), len(candidates)))
    score = _inside_score(part, cells, points)
    return candidates[np.argmax(score, axis=1)]


def _locate_children(part: Partition, kids: np.ndarray, points: np.ndarray) -> np.ndarray:
    score = _inside_score(part, kids, points)
    return kids[np.arange(len(points)), np.argmax(score, axis=1)]
