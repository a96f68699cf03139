import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldroad.eigen import (choose_epsilon, discrete_eigenpair, discrete_lambda1, kpp_condition,
                             lambda1_closed_form, phi1_exact)
from fieldroad.field import FieldProblem
from fieldroad.grid import FieldFunction, RoadFunction, build_field_grid
from fieldroad.model import ModelParams, fisher, zero_reaction
from fieldroad.monotone import check_subsolution
from fieldroad.oracle import observed_orders

KPP = ModelParams(D=0.1, Dp=1.0, mu=1.0, nu=1.0, ell=10.0, L=10.0, m=1.0)


def test_closed_form_values():
    assert lambda1_closed_form(math.pi / 2, math.pi) == 2.0
    assert lambda1_closed_form(10.0, 10.0) == pytest.approx(0.12337005501361697, rel=1e-15)
    assert lambda1_closed_form(1e8, 2.0) == pytest.approx((math.pi / 2) ** 2, rel=1e-12)
    with pytest.raises(ValueError):
        lambda1_closed_form(0.0, 1.0)


def test_phi1_nodes():
    g = build_field_grid(2.0, 3.0, 8, 6)
    phi = phi1_exact(g).phi1.values
    assert phi[g.nx // 2, g.ny // 2] == 1.0
    assert np.all(phi[[0, -1], :] == 0) and np.all(phi[:, [0, -1]] == 0)
    i, j = g.node_index(-1.0, 1.5)
    assert phi[i, j] == pytest.approx(math.sin(math.pi / 4), rel=1e-15)
    assert phi.min() >= 0


def test_phi1_needs_even_counts():
    with pytest.raises(ValueError):
        phi1_exact(build_field_grid(1.0, 1.0, 5, 4))


def test_discrete_lambda_on_32_grid():
    g = build_field_grid(math.pi / 2, math.pi, 32, 32)
    assert abs(discrete_lambda1(g) - 2.0) < 0.02


def test_discrete_lambda_order():
    lams, hs = [], []
    for n in (16, 32, 64):
        g = build_field_grid(math.pi / 2, math.pi, n, n)
        lams.append(discrete_lambda1(g))
        hs.append(g.h1)
    orders = observed_orders(hs, [abs(l - 2.0) for l in lams])
    assert min(orders) >= 1.8
    # the five-point stencil underestimates lambda_1
    assert all(l < 2.0 for l in lams)


def test_eigenvector_matches_sines():
    g = build_field_grid(math.pi / 2, math.pi, 32, 32)
    _, vec = discrete_eigenpair(g)
    phi = phi1_exact(g).phi1.values.ravel()
    x = vec.values.ravel()
    assert abs(x @ phi) / (np.linalg.norm(x) * np.linalg.norm(phi)) > 0.999


def test_kpp_condition_cases():
    assert kpp_condition(KPP, fisher(KPP))
    bad = KPP.replace(D=10.0, ell=1.0, L=1.0)
    assert not kpp_condition(bad, fisher(bad))
    assert not kpp_condition(KPP, zero_reaction("field", 1.0))


def test_epsilon_matches_fisher_reduction():
    g = build_field_grid(10.0, 10.0, 64, 32)
    eps = choose_epsilon(KPP, fisher(KPP), g)
    expected = 0.99 * (1 - KPP.D * lambda1_closed_form(10.0, 10.0))
    assert eps == pytest.approx(expected, rel=1e-12)
    assert eps == pytest.approx(0.97779, abs=1e-5)


def test_epsilon_error_when_kpp_fails():
    p = KPP.replace(D=10.0, ell=1.0, L=1.0)
    with pytest.raises(ValueError, match="epsilon"):
        choose_epsilon(p, fisher(p), build_field_grid(1.0, 1.0, 8, 8))


def test_eps_phi_is_subsolution_for_any_road(rng):
    g = build_field_grid(10.0, 10.0, 32, 16)
    f = fisher(KPP)
    prob = FieldProblem(KPP, f, g)
    v = FieldFunction(g, choose_epsilon(KPP, f, g) * phi1_exact(g).phi1.values)
    for w in (RoadFunction.zeros(g), RoadFunction.constant(g, 1.0), RoadFunction.from_interior(g, rng.random(g.nx - 1))):
        assert check_subsolution(prob, v, w)[0]


@settings(max_examples=40, deadline=None)
@given(ell=st.floats(0.5, 20), L=st.floats(0.5, 20), grow=st.floats(1.0, 3.0))
def test_lambda_nonincreasing_in_size(ell, L, grow):
    base = lambda1_closed_form(ell, L)
    assert lambda1_closed_form(ell * grow, L) <= base
    assert lambda1_closed_form(ell, L * grow) <= base
    assert base > 0


def test_discrete_lambda_nonnegative():
    assert discrete_lambda1(build_field_grid(3.0, 0.5, 6, 4)) >= 0
