import numpy as np
import pytest

from fieldroad.coupled import CoupledOptions, solve_coupled
from fieldroad.eigen import choose_epsilon
from fieldroad.grid import FieldFunction, RoadFunction, build_field_grid
from fieldroad.model import AssumptionError, ModelParams, fisher, make_reaction, road_logistic, zero_reaction
from fieldroad.monotone import maximal_solution
from fieldroad.tworoad import (TwoRoadParams, TwoRoadProblem, TwoRoadSolution, apply_S2, nontriviality_check2,
                               solve_two_road, validate_two_road)

BASE = ModelParams(D=0.1, Dp=1.0, mu=1.0, nu=1.0, ell=10.0, L=10.0, m=1.0)
GRID = build_field_grid(10.0, 10.0, 32, 16, "two")


def _h(p2):
    return make_reaction("logistic", "road", (0.0, p2.m_p), K=p2.m_p)


@pytest.fixture(scope="module")
def symmetric():
    p2 = TwoRoadParams(BASE, Dpp=1.0, mu_p=1.0, nu_p=1.0)
    f, g = fisher(BASE), road_logistic(BASE)
    upper, lower = solve_two_road(p2, f, g, road_logistic(BASE), GRID)
    return p2, upper, lower


def test_derived_cap():
    p2 = TwoRoadParams(BASE.replace(mu=2.0), Dpp=1.0, mu_p=1.0, nu_p=3.0)
    assert p2.m_p == pytest.approx(6.0)
    assert p2.mu_p / p2.nu_p * p2.m_p == pytest.approx(p2.box_cap)


def test_ordering_validated_not_swapped():
    p2 = TwoRoadParams(BASE, Dpp=1.0, mu_p=2.0, nu_p=1.0)
    rep = validate_two_road(p2, fisher(BASE), road_logistic(BASE), _h(p2))
    assert not rep["road_ordering"].passed
    with pytest.raises(AssumptionError):
        TwoRoadProblem(p2, fisher(BASE), road_logistic(BASE), _h(p2), GRID)


def test_apply_S2_basic_properties(rng):
    p2 = TwoRoadParams(BASE, Dpp=1.0, mu_p=0.5, nu_p=1.0)
    prob = TwoRoadProblem(p2, fisher(BASE), road_logistic(BASE), _h(p2), GRID)
    g = prob.grid
    zero = RoadFunction.zeros(g)
    assert np.all(apply_S2(prob, FieldFunction.zeros(g), zero, zero).values == 0)
    k = p2.box_cap
    y = apply_S2(prob, FieldFunction.constant(g, k), RoadFunction.constant(g, BASE.m), RoadFunction.constant(g, p2.m_p))
    assert y.values.max() <= k + 1e-11
    # monotone in each argument separately
    z = FieldFunction.from_unknowns(g, rng.random(g.n_unknowns) * k * 0.5)
    z2 = FieldFunction(g, np.minimum(k, z.values + 0.3 * g.unknown_mask))
    u = RoadFunction.from_interior(g, rng.random(g.nx - 1) * 0.5)
    u2 = RoadFunction(g, u.values + 0.3 * (np.arange(g.nx + 1) % g.nx > 0))
    w = RoadFunction.from_interior(g, rng.random(g.nx - 1) * p2.m_p * 0.5)
    w2 = RoadFunction(g, np.minimum(p2.m_p, w.values * 1.5))
    base = apply_S2(prob, z, u, w).values
    for args in ((z2, u, w), (z, u2, w), (z, u, w2)):
        assert np.all(apply_S2(prob, *args).values >= base - 1e-11)


def test_symmetric_data_reflects(symmetric):
    _, upper, _ = symmetric
    assert np.max(np.abs(upper.u.values - upper.w.values)) <= 1e-8
    assert np.max(np.abs(upper.v.values - upper.v.values[:, ::-1])) <= 1e-8


def test_caps_and_residuals(symmetric):
    p2, upper, lower = symmetric
    for s in (upper, lower):
        assert s.u.values.max() <= BASE.m + 1e-9 and s.w.values.max() <= p2.m_p + 1e-9
        assert s.v.values.max() <= p2.box_cap + 1e-9 and s.v.values.min() >= -1e-9
        assert max(s.residuals.values()) <= 1e-6
    assert np.all(lower.u.values <= upper.u.values + 1e-8)


def test_eps_bound_and_flags(symmetric):
    _, upper, _ = symmetric
    eps = choose_epsilon(BASE, fisher(BASE), GRID.with_mode("one"))
    flags = nontriviality_check2(upper, eps)
    assert flags == {"v_nontrivial": True, "u_nontrivial": True, "w_nontrivial": True}


def test_flags_on_constructed_inputs(symmetric):
    _, upper, _ = symmetric
    g = upper.v.grid
    trivial = TwoRoadSolution(RoadFunction.zeros(g), FieldFunction.zeros(g), RoadFunction.zeros(g), upper.report)
    assert not any(nontriviality_check2(trivial, 0.0).values())
    no_w = TwoRoadSolution(upper.u, upper.v, RoadFunction.zeros(g), upper.report)
    assert nontriviality_check2(no_w, 0.0)["w_nontrivial"] is False


def test_small_top_exchange_keeps_caps():
    g = build_field_grid(10.0, 10.0, 16, 8, "two")
    p2 = TwoRoadParams(BASE, Dpp=1.0, mu_p=0.05, nu_p=1.0)
    assert p2.m_p == pytest.approx(20.0)
    upper, _ = solve_two_road(p2, fisher(BASE), road_logistic(BASE), _h(p2), g)
    assert upper.w.values.max() <= p2.m_p + 1e-9
    assert upper.v.values.max() <= p2.box_cap + 1e-9


def test_comparison_in_both_roads(rng):
    p2 = TwoRoadParams(BASE, Dpp=1.0, mu_p=1.0, nu_p=1.0)
    prob = TwoRoadProblem(p2, fisher(BASE), road_logistic(BASE), road_logistic(BASE), GRID)
    g = prob.grid
    u2, w2 = rng.random(g.nx - 1), rng.random(g.nx - 1)
    u1, w1 = u2 * rng.random(g.nx - 1), w2 * rng.random(g.nx - 1)
    v1, _ = maximal_solution(prob.field, RoadFunction.from_interior(g, u1), w_top=RoadFunction.from_interior(g, w1))
    v2, _ = maximal_solution(prob.field, RoadFunction.from_interior(g, u2), w_top=RoadFunction.from_interior(g, w2))
    assert np.all(v1.values <= v2.values + 1e-8)


def test_reduces_to_one_road_when_top_barely_exchanges():
    # nu' large, mu' = 1/nu', no top reaction: the top row is nearly Dirichlet
    g1 = build_field_grid(10.0, 10.0, 16, 8)
    f, g = fisher(BASE), road_logistic(BASE)
    opts = CoupledOptions()
    one_lower, _ = solve_coupled(BASE, f, g, g1, opts)
    diffs = []
    for nu_p in (1e3, 1e4):
        p2 = TwoRoadParams(BASE, Dpp=100.0, mu_p=1.0 / nu_p, nu_p=nu_p)
        _, lower = solve_two_road(p2, f, g, zero_reaction("road", p2.m_p), g1.with_mode("two"), opts)
        diffs.append(np.max(np.abs(lower.v.values - one_lower.v.values)))
        assert np.max(np.abs(lower.u.values - one_lower.u.values)) <= 10.0 / nu_p
        assert diffs[-1] <= 10.0 / nu_p
    assert diffs[1] < diffs[0] / 5
