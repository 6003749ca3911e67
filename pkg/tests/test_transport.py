import json

import numpy as np
import pytest
from helpers import OCTAHEDRON, circle_points, octahedron, random_admissible
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from gausskraft import transport as tp
from gausskraft.errors import Infeasible
from gausskraft.functional import evaluate
from gausskraft.polytope import ProblemInstance, build
from gausskraft.simplex import solve_transport
from gausskraft.solver import solve


def _linprog_transport(cost, supply, demand, forbidden):
    m, n = cost.shape
    A_eq = np.vstack([np.kron(np.eye(m), np.ones(n)), np.kron(np.ones(m), np.eye(n))])
    bounds = [(0, 0) if f else (0, None) for f in forbidden.ravel()]
    res = linprog(np.where(forbidden, 0.0, cost).ravel(), A_eq=A_eq, b_eq=np.r_[supply, demand], bounds=bounds)
    return res


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 6), st.integers(1, 7), st.floats(0.0, 0.5))
def test_simplex_matches_linprog(seed, m, n, p_forbid):
    rng = np.random.default_rng(seed)
    cost = rng.normal(size=(m, n))
    supply = rng.uniform(0.1, 2.0, m)
    demand = rng.uniform(0.1, 2.0, n)
    demand *= supply.sum() / demand.sum()
    forbidden = rng.random((m, n)) < p_forbid
    ref = _linprog_transport(cost, supply, demand, forbidden)
    if ref.status == 2:
        with pytest.raises(Infeasible):
            solve_transport(cost, supply, demand, forbidden)
        return
    assert ref.status == 0
    sol = solve_transport(cost, supply, demand, forbidden)
    assert sol.cost == pytest.approx(ref.fun, abs=1e-9 * max(1.0, abs(ref.fun)))
    assert np.allclose(sol.flow.sum(axis=1), supply, atol=1e-10)
    assert np.allclose(sol.flow.sum(axis=0), demand, atol=1e-10)
    assert np.all(sol.flow[forbidden] == 0.0) and np.all(sol.flow >= 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_pricing_rules_agree(seed):
    rng = np.random.default_rng(seed)
    cost = rng.integers(0, 4, size=(5, 6)).astype(float)  # ties make pivots degenerate
    supply = np.ones(5) * 6
    demand = np.ones(6) * 5
    a = solve_transport(cost, supply, demand, rule="dantzig")
    b = solve_transport(cost, supply, demand, rule="bland")
    assert a.cost == pytest.approx(b.cost, abs=1e-12)


def test_simplex_rejects_bad_input():
    with pytest.raises(Infeasible):
        solve_transport(np.zeros((2, 2)), [1.0, 1.0], [1.0, 2.0])
    # row 0 can only reach column 0, which cannot absorb it
    with pytest.raises(Infeasible):
        solve_transport(np.zeros((2, 2)), [2.0, 1.0], [1.0, 2.0], [[False, True], [False, False]])
    with pytest.raises(ValueError):
        solve_transport(np.zeros((2, 2)), [1.0, 1.0], [1.0, 1.0], rule="steepest")


def test_octahedron_plan():
    plan = tp.plan_from_polytope(build(octahedron(), np.zeros(6)))
    assert np.allclose(plan.cell_areas, 2 * np.pi / 3, atol=1e-12)
    assert np.allclose(plan.cost_terms, plan.cost_terms[0], atol=1e-12)
    assert plan.source_residual() < 1e-12
    assert tp.duality_gap(octahedron(), build(octahedron(), np.zeros(6))) == pytest.approx(0.0, abs=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_gap_equals_mass_mismatch_pairing(seed):
    # Q(r) - cost(plan) is sum_i (area_i - mu_i) r_i at any r
    rng = np.random.default_rng(seed)
    inst = random_admissible(rng, 10)
    r = rng.normal(scale=0.3, size=10)
    P = build(inst, r)
    areas = evaluate(inst, r).cell_areas
    assert tp.duality_gap(inst, P) == pytest.approx(np.dot(areas - inst.mu, r), abs=1e-11)


def test_gap_vanishes_at_the_optimum():
    inst = random_admissible(np.random.default_rng(21), 12)
    rep = solve(inst)
    assert abs(tp.duality_gap(inst, build(inst, rep.log_radii))) < 1e-7


def test_absorbed_vertex_contributes_nothing():
    pts = np.vstack([OCTAHEDRON, [1.0, 1.0, 1.0]])
    inst = ProblemInstance(2, pts, np.full(7, 4 * np.pi / 7))
    plan = tp.plan_from_polytope(build(inst, np.r_[np.zeros(6), np.log(0.1)]))
    assert plan.cells[6].empty
    assert plan.cost_terms[6] == 0.0


def test_sample_normals():
    N, w = tp.sample_normals(2, 80)
    assert N.shape == (80, 3) and w.sum() == pytest.approx(4 * np.pi)
    R, _ = tp.sample_normals(2, 80, seed=4)
    assert np.allclose(np.linalg.norm(R, axis=1), 1.0)
    # a rotation preserves pairwise geometry
    assert np.allclose(N @ N.T, R @ R.T, atol=1e-12)
    with pytest.raises(ValueError):
        tp.sample_normals(2, 100)
    assert tp.sample_normals(1, 16)[0].shape == (16, 2)


def test_identity_matching_on_the_circle():
    N, w = tp.sample_normals(1, 8)
    res = tp.lp_oracle(ProblemInstance(1, N, w), 8)
    assert res.value == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.plan.dense(), np.diag(w), atol=1e-12)


def test_two_antipodal_atoms():
    # the only feasible plan sends each half-circle to the atom it faces
    inst = ProblemInstance(1, circle_points([0.0, np.pi]), [np.pi, np.pi])
    res = tp.lp_oracle(inst, 16)
    N = res.plan.normals
    assert np.all(np.sum(inst.points[res.plan.rows] * N[res.plan.cols], axis=1) > 0)
    brute = sum(w * np.log(np.max(inst.points @ n)) for n, w in zip(N, res.plan.weights))
    assert res.value == pytest.approx(brute, abs=1e-12)


def test_discrete_plan_marginals_and_json():
    inst = random_admissible(np.random.default_rng(22), 8)
    res = tp.lp_oracle(inst, 80, seed=1)
    plan = res.plan
    assert np.allclose(plan.row_sums(), inst.mu, atol=1e-9)
    assert np.allclose(plan.col_sums(), plan.weights, atol=1e-9)
    assert np.all(np.sum(inst.points[plan.rows] * plan.normals[plan.cols], axis=1) > 0)
    data = json.loads(plan.to_json())
    assert data["K"] == 8 and data["M"] == 80 and len(data["triplets"]) == len(plan.mass)
    assert sum(len(v) for v in plan.by_source().values()) == len(plan.mass)


def test_oracle_approaches_semidiscrete_value():
    inst = random_admissible(np.random.default_rng(23), 8)
    q = solve(inst).Q_star
    # finer sample sets approach the semi-discrete optimum
    vals = [tp.lp_oracle(inst, M).value for M in (80, 320)]
    assert abs(vals[1] - q) < abs(vals[0] - q)
    assert abs(vals[1] - q) / abs(q) < 0.02


def test_oracle_rejects_mismatched_totals():
    N, w = tp.sample_normals(2, 20)
    with pytest.raises(Infeasible):
        tp.lp_oracle_on(octahedron(), N, 2 * w)
