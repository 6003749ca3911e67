"""Convex polytopes with vertices on prescribed rays.

A :class:`RadialPolytope` is the convex hull of the points ``rho_i * x_i``
where ``x_i`` are the instance directions and ``rho_i = exp(log_radii[i])``.
It exposes the support function, the inverse transform recovering radii from
the support function, and the normal cells (generalized Gauss map) of its
vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from . import sphgeom
from .errors import HullDegenerate, NonTangent, OriginNotInterior, UnsupportedDimension
from .sphgeom import Arc, SphericalPolygon

FACET_MERGE_ANGLE = 1e-9
ORIGIN_TOL = 1e-12


@dataclass(frozen=True)
class ProblemInstance:
    """Directions on S^n together with the masses prescribed at them."""

    dimension: int
    points: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise UnsupportedDimension(f"dimension must be 1 or 2, got {self.dimension}")
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        mu = np.asarray(self.mu, dtype=float).ravel()
        if pts.shape[1] != self.dimension + 1:
            raise ValueError(f"points must have {self.dimension + 1} coordinates")
        if len(pts) != len(mu):
            raise ValueError(f"{len(pts)} points but {len(mu)} masses")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(mu))):
            raise ValueError("instance contains NaN or infinite values")
        if np.any(mu < 0):
            raise ValueError("masses must be nonnegative")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms <= 1e-300):
            raise ValueError("zero direction vector")
        pts = pts / norms[:, None]
        # chord distance, since cos(MERGE_ANGLE) rounds to 1
        if len(pts) > 1 and np.min(pdist(pts)) <= sphgeom.MERGE_ANGLE:
            raise ValueError("directions must be pairwise distinct")
        pts.flags.writeable = False
        mu.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mu", mu)

    @property
    def K(self) -> int:
        return len(self.mu)

    @property
    def sigma(self) -> float:
        return sphgeom.sphere_measure(self.dimension)

    def with_mu(self, mu) -> "ProblemInstance":
        return ProblemInstance(self.dimension, self.points, mu)


@dataclass(frozen=True)
class Facet:
    normal: np.ndarray
    offset: float
    vertices: tuple[int, ...]


@dataclass(frozen=True)
class NormalCell:
    """Set of outward unit normals attained at vertex ``index``."""

    index: int
    region: Optional[SphericalPolygon | Arc]
    area: float

    @property
    def empty(self) -> bool:
        return self.region is None

    @property
    def vertices(self) -> np.ndarray:
        """Corner normals of the cell (arc endpoints on S^1)."""
        if self.region is None:
            return np.zeros((0, 0))
        if isinstance(self.region, Arc):
            return np.array(self.region.endpoints)
        return self.region.vertices


@dataclass
class RadialPolytope:
    instance: ProblemInstance
    log_radii: np.ndarray
    facets: list[Facet]
    hull_vertex: np.ndarray
    origin_interior: bool
    _cell_normals: list[Optional[np.ndarray]] = field(repr=False, default_factory=list)

    @property
    def dimension(self) -> int:
        return self.instance.dimension

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.log_radii)

    @property
    def points(self) -> np.ndarray:
        return self.radii[:, None] * self.instance.points

    @property
    def vertex_status(self) -> list[str]:
        return ["HullVertex" if v else "Absorbed" for v in self.hull_vertex]

    @property
    def facet_normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.facets])

    @property
    def facet_offsets(self) -> np.ndarray:
        return np.array([f.offset for f in self.facets])

    def euler_characteristic(self) -> int:
        V = int(np.count_nonzero(self.hull_vertex))
        if self.dimension == 1:
            return V - len(self.facets)
        E = sum(len(f.vertices) for f in self.facets) // 2
        return V - E + len(self.facets)

    def require_origin(self) -> None:
        if not self.origin_interior:
            raise OriginNotInterior("origin is not strictly inside the polytope")

    def support(self, normals) -> np.ndarray | float:
        return support(self, normals)

    def radial_function(self, directions) -> np.ndarray:
        """Radial function at arbitrary directions (ray-facet intersection)."""
        self.require_origin()
        u = np.atleast_2d(directions)
        dots = u @ self.facet_normals.T
        with np.errstate(divide="ignore"):
            ratios = np.where(dots > 0, self.facet_offsets[None, :] / np.where(dots > 0, dots, 1.0), np.inf)
        return ratios.min(axis=1)

    def normal_cell(self, i: int) -> NormalCell:
        return normal_cell(self, i)

    def normal_cells(self) -> list[NormalCell]:
        return [normal_cell(self, i) for i in range(self.instance.K)]


def _hull_points(instance: ProblemInstance, log_radii: np.ndarray) -> tuple[np.ndarray, float]:
    shift = float(np.max(log_radii))
    return np.exp(log_radii - shift)[:, None] * instance.points, shift


def build(instance: ProblemInstance, log_radii: Sequence[float]) -> RadialPolytope:
    """Convex hull of the points exp(log_radii[i]) * x_i."""
    log_radii = np.array(log_radii, dtype=float).ravel()
    if log_radii.shape != (instance.K,):
        raise ValueError(f"expected {instance.K} log radii, got {log_radii.shape}")
    if not np.all(np.isfinite(log_radii)):
        raise ValueError("log radii must be finite")
    log_radii.flags.writeable = False
    if instance.dimension == 1:
        return _build_planar(instance, log_radii)
    return _build_spatial(instance, log_radii)


def _build_planar(instance: ProblemInstance, log_radii: np.ndarray) -> RadialPolytope:
    pts, shift = _hull_points(instance, log_radii)
    K = len(pts)
    if K < 3:
        raise HullDegenerate("a polygon needs at least three points")
    order = sorted(range(K), key=lambda k: (pts[k, 0], pts[k, 1], k))

    def cross(o, a, b):
        return (pts[a, 0] - pts[o, 0]) * (pts[b, 1] - pts[o, 1]) - (pts[a, 1] - pts[o, 1]) * (pts[b, 0] - pts[o, 0])

    def chain(seq):
        out: list[int] = []
        for k in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], k) <= ORIGIN_TOL:
                out.pop()
            out.append(k)
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    ring = lower[:-1] + upper[:-1]
    if len(ring) < 3:
        raise HullDegenerate("points are collinear")
    facets = []
    for a, b in zip(ring, ring[1:] + ring[:1]):
        d = pts[b] - pts[a]
        n = np.array([d[1], -d[0]]) / np.hypot(d[0], d[1])
        facets.append(Facet(n, float(n @ pts[a]) * np.exp(shift), (a, b)))
    hull_vertex = np.zeros(K, dtype=bool)
    hull_vertex[ring] = True
    offsets = np.array([f.offset for f in facets]) * np.exp(-shift)
    cells: list[Optional[np.ndarray]] = [None] * K
    for k, v in enumerate(ring):
        cells[v] = np.array([facets[k - 1].normal, facets[k].normal])
    return RadialPolytope(instance, log_radii, facets, hull_vertex, bool(offsets.min() > ORIGIN_TOL), cells)


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _build_spatial(instance: ProblemInstance, log_radii: np.ndarray) -> RadialPolytope:
    pts, shift = _hull_points(instance, log_radii)
    K = len(pts)
    if K < 4:
        raise HullDegenerate("a polytope in 3-space needs at least four points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise HullDegenerate(f"convex hull is degenerate: {exc}") from None
    normals = hull.equations[:, :3]
    dist = -hull.equations[:, 3]
    simplices = hull.simplices.copy()
    # orient every triangle counterclockwise seen from outside
    p0, p1, p2 = pts[simplices[:, 0]], pts[simplices[:, 1]], pts[simplices[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(p1 - p0, p2 - p0), normals) < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]

    groups = _DisjointSet(len(simplices))
    for s, nbrs in enumerate(hull.neighbors):
        for t in nbrs:
            if t > s and np.linalg.norm(normals[s] - normals[t]) < FACET_MERGE_ANGLE:
                groups.union(s, t)
    roots = [groups.find(s) for s in range(len(simplices))]
    face_id = {r: k for k, r in enumerate(sorted(set(roots)))}
    tri_face = np.array([face_id[r] for r in roots])
    nfaces = len(face_id)

    incident: list[set[int]] = [set() for _ in range(K)]
    for s, tri in enumerate(simplices):
        for v in tri:
            incident[v].add(int(tri_face[s]))
    hull_vertex = np.array([len(incident[v]) >= 3 for v in range(K)])

    face_normals = np.zeros((nfaces, 3))
    np.add.at(face_normals, tri_face, normals)
    face_normals /= np.linalg.norm(face_normals, axis=1)[:, None]
    facets = []
    for f in range(nfaces):
        members = simplices[tri_face == f]
        loop = [v for v in _boundary_loop(members) if hull_vertex[v]]
        offset = float(np.max(pts[loop] @ face_normals[f]))
        facets.append(Facet(face_normals[f], offset * np.exp(shift), tuple(loop)))
    origin_interior = bool(min(f.offset for f in facets) * np.exp(-shift) > ORIGIN_TOL)

    cells: list[Optional[np.ndarray]] = [None] * K
    for v in range(K):
        if hull_vertex[v]:
            cells[v] = _ordered_cell(face_normals[sorted(incident[v])])
    return RadialPolytope(instance, log_radii, facets, hull_vertex, origin_interior, cells)


def _boundary_loop(triangles: np.ndarray) -> list[int]:
    """Boundary cycle of a disc made of consistently oriented triangles."""
    edges = set()
    for a, b, c in triangles:
        for e in ((a, b), (b, c), (c, a)):
            if (e[1], e[0]) in edges:
                edges.remove((e[1], e[0]))
            else:
                edges.add(e)
    nxt = {int(a): int(b) for a, b in edges}
    start = min(nxt)
    loop = [start]
    while nxt[loop[-1]] != start:
        loop.append(nxt[loop[-1]])
        if len(loop) > len(nxt):
            raise HullDegenerate("facet boundary is not a simple cycle")
    return loop


def _ordered_cell(normals: np.ndarray) -> np.ndarray:
    """Sort corner normals counterclockwise around their mean direction."""
    centre = sphgeom.normalize(normals.sum(axis=0))
    helper = np.eye(3)[np.argmin(np.abs(centre))]
    e1 = sphgeom.normalize(np.cross(centre, helper))
    e2 = np.cross(centre, e1)
    order = np.argsort(np.arctan2(normals @ e2, normals @ e1), kind="stable")
    out = [normals[order[0]]]
    for n in normals[order[1:]]:
        if np.linalg.norm(n - out[-1]) > FACET_MERGE_ANGLE:
            out.append(n)
    if len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= FACET_MERGE_ANGLE:
        out.pop()
    return np.array(out)


def support(P: RadialPolytope, normals) -> np.ndarray | float:
    """h(N) = max_i rho_i <x_i, N>."""
    P.require_origin()
    N = np.asarray(normals, dtype=float)
    single = N.ndim == 1
    vals = np.max(np.atleast_2d(N) @ P.points.T, axis=1)
    return float(vals[0]) if single else vals


def radial_from_support(P: RadialPolytope, i: int) -> float:
    """1 / sup_N <x_i, N> / h(N); the sup is attained at a facet normal."""
    P.require_origin()
    N = P.facet_normals
    h = np.max(N @ P.points.T, axis=1)
    return float(1.0 / np.max((N @ P.instance.points[i]) / h))


def normal_cell(P: RadialPolytope, i: int) -> NormalCell:
    P.require_origin()
    corners = P._cell_normals[i]
    if corners is None:
        return NormalCell(i, None, 0.0)
    if P.dimension == 1:
        arc = Arc.between(corners[0], corners[1])
        return NormalCell(i, arc, arc.length)
    if len(corners) < 3:
        return NormalCell(i, None, 0.0)
    poly = SphericalPolygon(corners)
    return NormalCell(i, poly, sphgeom.polygon_area(poly))


def gauss_from_subdifferential(x, rho_x: float, v) -> np.ndarray:
    """Unit normal (-v + rho x) / sqrt(|v|^2 + rho^2) for a tangent vector v at x."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(float(v @ x)) > 1e-10 * max(1.0, float(np.linalg.norm(v))):
        raise NonTangent(f"<v, x> = {float(v @ x)!r} is not zero")
    return (-v + rho_x * x) / np.sqrt(float(v @ v) + rho_x**2)


def subdifferential_from_normal(x, rho_x: float, normal) -> np.ndarray:
    """Tangent vector v with gauss_from_subdifferential(x, rho_x, v) = normal.

    The normal is rescaled to M with <M, x> = rho_x and v = -M + rho_x x.
    """
    x = np.asarray(x, dtype=float)
    normal = np.asarray(normal, dtype=float)
    dot = float(normal @ x)
    if dot <= 0:
        raise OriginNotInterior("normal does not face away from the origin")
    m = rho_x * normal / dot
    return -m + rho_x * x


def export_obj(P: RadialPolytope) -> str:
    """Wavefront OBJ text of the hull, facets fan-triangulated."""
    if P.dimension != 2:
        raise UnsupportedDimension("OBJ export needs a polytope in 3-space")
    P.require_origin()
    verts = [int(v) for v in np.flatnonzero(P.hull_vertex)]
    index = {v: k + 1 for k, v in enumerate(verts)}
    pts = P.points
    lines = ["# gausskraft polytope"]
    lines += ["v {:.17g} {:.17g} {:.17g}".format(*pts[v]) for v in verts]
    for f in P.facets:
        loop = f.vertices
        for k in range(1, len(loop) - 1):
            lines.append(f"f {index[loop[0]]} {index[loop[k]]} {index[loop[k + 1]]}")
    return "\n".join(lines) + "\n"


def parse_obj(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and (1-based converted to 0-based) triangles of an OBJ text."""
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(t) for t in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(t.split("/")[0]) - 1 for t in parts[1:]])
    return np.array(verts), np.array(faces, dtype=int)
