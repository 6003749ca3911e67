import json

import numpy as np
import pytest

from gausskraft import sphgeom
from gausskraft.admissibility import check_vertex_bound
from gausskraft.errors import NonPositiveDensity
from gausskraft.ingest import DensitySpec, cell_masses, density_from_dict, discretize, load_density

BUMP = DensitySpec("CosinePowerBump", axis=[0, 0, 1], power=2.0, floor=0.1)
# int_{S^2} 0.1 + ((1 + z) / 2)^2 dsigma = 0.4 pi + 2 pi * 2/3
BUMP_TOTAL = 0.4 * np.pi + 4 * np.pi / 3


def test_uniform_level_zero():
    inst = discretize(DensitySpec(), 0)
    assert inst.K == 20
    assert np.allclose(inst.mu, 4 * np.pi / 20)


def test_bump_concentrates_and_rescales():
    inst = discretize(BUMP, 2)
    assert inst.mu.sum() == pytest.approx(4 * np.pi, abs=1e-12)
    heavy = inst.points[np.argmax(inst.mu)]
    light = inst.points[np.argmin(inst.mu)]
    assert heavy[2] > 0.8 and light[2] < -0.8


def test_bump_total_mass_converges():
    totals = [cell_masses(BUMP, level).sum() for level in range(5)]
    assert totals[4] == pytest.approx(BUMP_TOTAL, rel=1e-9)
    assert abs(totals[4] - totals[3]) / totals[3] < 1e-6


def test_tabulated_nesting_is_exact():
    values = np.arange(1.0, 81.0)
    tab = DensitySpec("Tabulated", level=1, values=values)
    area = sphgeom.geodesic_partition(1).areas
    exact = float(np.dot(values, area))
    for level in (0, 1, 2, 3):
        assert cell_masses(tab, level).sum() == pytest.approx(exact, rel=1e-12)
    # a coarse cell collects its four children
    assert cell_masses(tab, 0)[0] == pytest.approx(np.dot(values[:4], area[:4]))


def test_tabulated_with_zero_cell():
    tab = DensitySpec("Tabulated", level=0, values=np.r_[0.0, np.ones(19)])
    with pytest.raises(NonPositiveDensity):
        discretize(tab, 1)


def test_zero_floor_is_rejected():
    with pytest.raises(NonPositiveDensity):
        DensitySpec("CosinePowerBump", axis=[0, 0, 1], power=2.0, floor=0.0)


def test_representatives_lie_in_their_cells():
    part = sphgeom.geodesic_partition(2)
    inst = discretize(BUMP, 2)
    assert np.array_equal(sphgeom.locate(part, inst.points), np.arange(len(part)))


@pytest.mark.parametrize("level", [1, 2])
def test_vertex_bound_after_discretization(level):
    assert check_vertex_bound(discretize(BUMP, level))[0]


def test_circle_density():
    d = DensitySpec("CosinePowerBump", dimension=1, axis=[1, 0], power=3.0, floor=0.2)
    inst = discretize(d, 2)
    assert inst.K == 32 and inst.mu.sum() == pytest.approx(2 * np.pi, abs=1e-12)


def test_density_json(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"kind": "Tabulated", "level": 0, "values": list(range(1, 21))}))
    d = load_density(path)
    assert d.kind == "Tabulated" and d.values[3] == 4.0
    assert density_from_dict(BUMP.to_dict()).power == 2.0
    assert load_density("uniform").kind == "Uniform"
