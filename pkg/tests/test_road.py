import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldroad.grid import RoadFunction, build_field_grid
from fieldroad.model import ModelParams, road_logistic
from fieldroad.road import RoadProblem, apply_T_road, road_residual

P = ModelParams(D=0.1, Dp=1.0, mu=2.0, nu=1.0, ell=3.0, L=2.0, m=1.0)   # k = 2
GRID = build_field_grid(P.ell, P.L, 24, 8)


@pytest.fixture
def prob():
    return RoadProblem.bottom(P, road_logistic(P), GRID)


def test_zero_in_zero_out(prob):
    U = apply_T_road(prob, RoadFunction.zeros(GRID), RoadFunction.zeros(GRID))
    assert np.all(U.values == 0.0)


def test_cap_respected(prob):
    U = apply_T_road(prob, RoadFunction.constant(GRID, P.box_cap), RoadFunction.constant(GRID, P.m))
    assert U.values.max() <= P.m + 1e-14


def test_residual_of_fixed_point(prob):
    trace = RoadFunction.constant(GRID, 1.5)
    u = RoadFunction.zeros(GRID)
    for _ in range(500):
        U = apply_T_road(prob, trace, u)
        if np.max(np.abs(U.values - u.values)) < 1e-14:
            break
        u = U
    assert road_residual(prob, U, trace) <= 1e-12


def test_residual_simple_cases(prob):
    zero = RoadFunction.zeros(GRID)
    assert road_residual(prob, zero, zero) == 0.0
    assert road_residual(prob, zero, RoadFunction.constant(GRID, 0.3)) == pytest.approx(P.nu * 0.3)


def test_shift_below_lipschitz_rejected():
    with pytest.raises(ValueError):
        RoadProblem.bottom(P, road_logistic(P), GRID, eta=0.5)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_monotone_and_nonnegative(seed):
    r = np.random.default_rng(seed)
    prob = RoadProblem.bottom(P, road_logistic(P), GRID)
    n = GRID.nx - 1
    u2 = r.random(n) * P.m
    u1 = u2 * r.random(n)
    t2 = r.random(n) * P.box_cap
    t1 = t2 * r.random(n)
    U1 = apply_T_road(prob, RoadFunction.from_interior(GRID, t1), RoadFunction.from_interior(GRID, u1))
    U2 = apply_T_road(prob, RoadFunction.from_interior(GRID, t2), RoadFunction.from_interior(GRID, u2))
    assert np.all(U1.values <= U2.values + 1e-14)
    assert U1.values.min() >= -1e-14
    assert U2.values.max() <= P.m + 1e-14
