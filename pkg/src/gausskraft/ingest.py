"""Discretize a curvature density on the sphere into a ProblemInstance.

Each cell V_k of the geodesic partition contributes one atom: the point is
the cell representative and the mass is the integral of the density over
V_k.  The masses are then rescaled so that they sum to sigma(S^n) exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import sphgeom
from .errors import NonPositiveDensity
from .polytope import ProblemInstance

DENSITY_KINDS = ("Uniform", "CosinePowerBump", "Tabulated")
QUAD_RTOL = 1e-9


@dataclass(frozen=True)
class DensitySpec:
    """A strictly positive density on S^n.

    ``CosinePowerBump`` is m(x) = floor + ((1 + <axis, x>) / 2) ** power.
    ``Tabulated`` holds one value per cell of the partition at ``level``.
    """

    kind: str = "Uniform"
    dimension: int = 2
    axis: Optional[np.ndarray] = None
    power: float = 0.0
    floor: float = 1.0
    level: int = 0
    values: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in DENSITY_KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.kind == "CosinePowerBump":
            if self.axis is None:
                raise ValueError("CosinePowerBump needs an axis")
            axis = sphgeom.normalize(np.asarray(self.axis, dtype=float))
            if axis.shape != (self.dimension + 1,):
                raise ValueError("axis length must be dimension + 1")
            object.__setattr__(self, "axis", axis)
            if self.power < 0:
                raise ValueError("power must be nonnegative")
            if not self.floor > 0:
                raise NonPositiveDensity("CosinePowerBump floor must be positive")
        if self.kind == "Tabulated":
            vals = np.asarray(self.values, dtype=float).ravel()
            expected = len(sphgeom.geodesic_partition(self.level, self.dimension))
            if vals.shape != (expected,):
                raise ValueError(f"tabulated density at level {self.level} needs {expected} values")
            if not np.all(np.isfinite(vals)):
                raise ValueError("tabulated values must be finite")
            object.__setattr__(self, "values", vals)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.kind == "Uniform":
            return np.ones(len(x))
        if self.kind == "CosinePowerBump":
            t = np.clip((1.0 + x @ self.axis) / 2.0, 0.0, 1.0)
            return self.floor + t**self.power
        part = sphgeom.geodesic_partition(self.level, self.dimension)
        return self.values[sphgeom.locate(part, x)]

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "dimension": self.dimension}
        if self.kind == "CosinePowerBump":
            d.update(axis=self.axis.tolist(), power=self.power, floor=self.floor)
        elif self.kind == "Tabulated":
            d.update(level=self.level, values=self.values.tolist())
        return d


def density_from_dict(d: dict) -> DensitySpec:
    kind = d.get("kind", "Uniform")
    dim = int(d.get("dimension", 2))
    if kind == "CosinePowerBump":
        return DensitySpec(kind, dim, axis=d["axis"], power=float(d.get("power", 0.0)), floor=float(d["floor"]))
    if kind == "Tabulated":
        return DensitySpec(kind, dim, level=int(d["level"]), values=np.asarray(d["values"], dtype=float))
    return DensitySpec(kind, dim)


def load_density(source: str | Path) -> DensitySpec:
    """Density from a JSON file, or one of the names ``uniform`` / ``bump``."""
    name = str(source)
    if name.lower() == "uniform":
        return DensitySpec("Uniform")
    if name.lower() == "bump":
        return DensitySpec("CosinePowerBump", axis=np.array([0.0, 0.0, 1.0]), power=2.0, floor=0.1)
    with open(source) as fh:
        return density_from_dict(json.load(fh))


def _tabulated_cell_masses(density: DensitySpec, part: sphgeom.Partition) -> np.ndarray:
    """Exact cell masses using the nesting of partition levels."""
    branch = 2 if density.dimension == 1 else 4
    src = sphgeom.geodesic_partition(density.level, density.dimension)
    if part.level >= density.level:
        parent = np.arange(len(part)) // branch ** (part.level - density.level)
        return density.values[parent] * part.areas
    per_cell = branch ** (density.level - part.level)
    return (density.values * src.areas).reshape(len(part), per_cell).sum(axis=1)


def cell_masses(density: DensitySpec, level: int) -> np.ndarray:
    """Integral of the density over every partition cell (no rescale)."""
    part = sphgeom.geodesic_partition(level, density.dimension)
    if density.kind == "Uniform":
        return part.areas.copy()
    if density.kind == "Tabulated":
        return _tabulated_cell_masses(density, part)
    if density.dimension == 1:
        return np.array([sphgeom.integrate(density, part.region(k), QUAD_RTOL * part.areas[k]) for k in range(len(part))])
    return sphgeom.integrate_triangles(density, part.triangles(), QUAD_RTOL, relative=True)


def discretize(density: DensitySpec, level: int) -> ProblemInstance:
    """Atoms at partition representatives carrying the cell masses."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    masses = cell_masses(density, level)
    bad = np.flatnonzero(~(masses > 0))
    if len(bad):
        raise NonPositiveDensity(f"{len(bad)} cell(s) with nonpositive mass, first at index {int(bad[0])}")
    part = sphgeom.geodesic_partition(level, density.dimension)
    sigma = sphgeom.sphere_measure(density.dimension)
    mu = masses * (sigma / masses.sum())
    return ProblemInstance(density.dimension, part.representatives, mu)
