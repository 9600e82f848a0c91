import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tvlob.block_solver import solve_block_continuous
from tvlob.cost_engine import (ContinuousStrategy, DiscreteStrategy, ImpactState, apply_trade,
                               continuous_cost, discrete_cost, discretize, propagate,
                               state_at_rest)
from tvlob.errors import InvalidConfig
from tvlob.lob_shape import BlockShape, PowerLawShape
from tvlob.manipulation import round_trip
from tvlob.market_model import Constant, MarketParams, TimeGrid, grid_coefficients
from tvlob.oracle import impact_matrix

BLOCK = BlockShape()
UNIT = MarketParams(Constant(1.0), Constant(1.0), 1.0)


@pytest.mark.parametrize("model", ["V", "P"])
def test_rest_is_preserved(model, ref_params):
    s = propagate(state_at_rest(), 0.7, model, ref_params, PowerLawShape(0.5))
    assert (s.E, s.D, s.t) == (0.0, 0.0, 0.7)


def test_volume_impact_halves_after_log2():
    s = propagate(ImpactState(1.0, 1.0, 0.0), math.log(2), "V", UNIT, BLOCK)
    assert s.E == pytest.approx(0.5, rel=1e-14)
    assert s.D == pytest.approx(0.5, rel=1e-14)


def test_models_agree_for_flat_book_and_constant_depth(flat_params):
    s0 = ImpactState(3.0, 1.5, 0.1)
    v = propagate(s0, 0.6, "V", flat_params, BLOCK)
    p = propagate(s0, 0.6, "P", flat_params, BLOCK)
    assert v.E == pytest.approx(p.E, rel=1e-14)
    assert v.D == pytest.approx(p.D, rel=1e-14)


def test_propagate_refuses_to_go_backwards():
    with pytest.raises(ValueError):
        propagate(ImpactState(0.0, 0.0, 0.5), 0.2, "V", UNIT, BLOCK)


def test_zero_trade_is_a_no_op():
    s = ImpactState(1.0, 1.0, 0.0)
    assert apply_trade(s, 0.0, UNIT, BLOCK) == (s, 0.0)


def test_trade_on_unit_depth():
    s, cash = apply_trade(state_at_rest(), 2.0, UNIT, BLOCK)
    assert (s.E, s.D, cash) == (2.0, 2.0, 2.0)


def test_trade_on_depth_four():
    p = MarketParams(Constant(4.0), Constant(1.0))
    s, cash = apply_trade(state_at_rest(), 2.0, p, BLOCK)
    assert s.D == 0.5
    assert cash == pytest.approx(0.5, rel=1e-15)


def test_zero_strategy_costs_nothing(ref_params, ref_grid):
    s = DiscreteStrategy(ref_grid, np.zeros(21), 0.0)
    for model in "VP":
        assert discrete_cost(s, model, ref_params, PowerLawShape(0.5)).cost == 0.0


def test_two_trade_quadratic_form():
    s = DiscreteStrategy(TimeGrid([0.0, 1.0]), np.array([-1.0, -1.0]), 2.0)
    assert discrete_cost(s, "V", UNIT, BLOCK).cost == pytest.approx(1 + math.exp(-1), rel=1e-14)


def test_full_cost_adds_unaffected_price():
    s = DiscreteStrategy(TimeGrid([0.0, 1.0]), np.array([-1.0, -1.0]), 2.0)
    rep = discrete_cost(s, "V", UNIT, BLOCK, s0=10.0)
    assert rep.full_cost == pytest.approx(-20.0 + rep.cost)
    assert len(rep.per_trade) == 2


def test_liquidation_constraint_is_enforced():
    with pytest.raises(InvalidConfig):
        DiscreteStrategy(TimeGrid([0.0, 1.0]), np.array([1.0, 1.0]), 1.0)


@given(t1=st.floats(0.0, 0.8), gap=st.floats(0.01, 0.2), x=st.floats(-5, 5))
def test_round_trip_matches_closed_form(ref_params, t1, gap, x):
    t2 = t1 + gap
    lam2 = float(ref_params.lam(t2))
    expected = x * x / (2 * lam2) * (math.exp(ref_params.int_eta(t1, t2)) + 1
                                     - 2 * math.exp(-ref_params.int_rho(t1, t2)))
    s = round_trip(t1, t2, x)
    got = discrete_cost(s, "V", ref_params, BLOCK).cost
    assert got == pytest.approx(expected, rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("model", ["V", "P"])
@given(xi=st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_block_cost_is_half_quadratic_form(ref_params, model, xi):
    grid = TimeGrid(np.array([0.0, 0.1, 0.35, 0.6, 1.0]))
    xi = np.array(xi)
    M = impact_matrix(grid_coefficients(ref_params, grid), model)
    s = DiscreteStrategy(grid, xi, -xi.sum())
    got = discrete_cost(s, model, ref_params, BLOCK).cost
    assert got == pytest.approx(0.5 * xi @ M @ xi, rel=1e-10, abs=1e-10)


@given(xi=st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_models_coincide_for_flat_book_constant_depth(flat_params, xi):
    grid = TimeGrid.regular(1.0, 3)
    xi = np.array(xi)
    s = DiscreteStrategy(grid, xi, -xi.sum())
    v = discrete_cost(s, "V", flat_params, BLOCK).cost
    p = discrete_cost(s, "P", flat_params, BLOCK).cost
    assert v == pytest.approx(p, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("model", ["V", "P"])
@given(x1=st.floats(-5, 5), x2=st.floats(-5, 5), e0=st.floats(-3, 3))
def test_splitting_a_trade_costs_the_same(model, x1, x2, e0):
    shape = PowerLawShape(0.5)
    p = MarketParams(Constant(2.0), Constant(1.0))
    start = ImpactState(e0, float(shape.F_inv(e0 / 2.0)), 0.0)
    s1, c1 = apply_trade(start, x1, p, shape)
    s2, c2 = apply_trade(s1, x2, p, shape)
    s3, c3 = apply_trade(start, x1 + x2, p, shape)
    assert c1 + c2 == pytest.approx(c3, rel=1e-9, abs=1e-9)
    assert s2.E == pytest.approx(s3.E, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("model", ["V", "P"])
@pytest.mark.parametrize("gamma", [-0.3, 0.0, 1.0])
@given(xs=st.lists(st.floats(-5, 5), min_size=1, max_size=6), t=st.floats(0.01, 0.2))
def test_state_links_volume_and_price_impact(ref_params, model, gamma, xs, t):
    shape = PowerLawShape(gamma)
    s = state_at_rest()
    for x in xs:
        s, _ = apply_trade(s, x, ref_params, shape)
        s = propagate(s, s.t + t, model, ref_params, shape)
        lam = float(ref_params.lam(s.t))
        assert s.E == pytest.approx(lam * float(shape.F(s.D)), rel=1e-9, abs=1e-9)


def test_continuous_zero_strategy(ref_params):
    s = ContinuousStrategy(np.linspace(0, 1, 11), np.zeros(11))
    assert continuous_cost(s, "V", ref_params, BLOCK).cost == 0.0


def test_continuous_impulses_only_match_discrete(ref_params):
    grid = TimeGrid(np.array([0.0, 0.25, 0.5, 1.0]))
    xi = np.array([1.0, -2.0, 0.5, 3.0])
    d = discrete_cost(DiscreteStrategy(grid, xi, -xi.sum()), "V", ref_params,
                      PowerLawShape(1.0)).cost
    c = ContinuousStrategy(grid.times, np.zeros(4), tuple(zip(grid.times, xi)), -xi.sum())
    got = continuous_cost(c, "V", ref_params, PowerLawShape(1.0)).cost
    assert got == pytest.approx(d, rel=1e-12)


@pytest.mark.parametrize("model", ["V", "P"])
def test_optimal_continuous_block_cost(ref_params, model):
    sol = solve_block_continuous(-50.0, ref_params, model)
    got = continuous_cost(sol.strategy, model, ref_params, BLOCK).cost
    assert got == pytest.approx(sol.cost, rel=1e-5)


def test_discretize_keeps_volume(ref_params):
    sol = solve_block_continuous(10.0, ref_params, "V", samples=101)
    d = discretize(sol.strategy)
    assert d.xi.sum() == pytest.approx(sol.strategy.total(), rel=1e-12)
    d2 = discretize(sol.strategy, 51)
    assert len(d2.xi) == 51
