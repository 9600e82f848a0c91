"""Optimal execution in a limit order book with time-varying depth and resilience."""

from .block_solver import (BlockSolution, ConditionReport, pd_check_block, pms_condition_block,
                           solve_block_continuous, solve_block_discrete, ttpm_condition_block)
from .cost_engine import (ContinuousStrategy, DiscreteStrategy, ImpactState, continuous_cost,
                          discrete_cost)
from .general_solver import (GeneralSolution, HFunction, assumption_check, powerlaw_conditions,
                             solve_general_continuous_P, solve_general_continuous_V,
                             solve_general_discrete_P, solve_general_discrete_V)
from .lob_shape import BlockShape, PowerLawShape, TabulatedShape
from .manipulation import ManipulationReport, classify_ttpm, search_pms
from .market_model import (Constant, MarketParams, PiecewiseLinear, Sinusoid, TimeGrid,
                           grid_coefficients)
from .oracle import OracleResult, oracle_block, oracle_general

__all__ = [
    "BlockShape", "BlockSolution", "ConditionReport", "Constant", "ContinuousStrategy",
    "DiscreteStrategy", "GeneralSolution", "HFunction", "ImpactState", "ManipulationReport",
    "MarketParams", "OracleResult", "PiecewiseLinear", "PowerLawShape", "Sinusoid",
    "TabulatedShape", "TimeGrid", "assumption_check", "classify_ttpm", "continuous_cost",
    "discrete_cost", "grid_coefficients", "oracle_block", "oracle_general", "pd_check_block",
    "pms_condition_block", "powerlaw_conditions", "search_pms", "solve_block_continuous",
    "solve_block_discrete", "solve_general_continuous_P", "solve_general_continuous_V",
    "solve_general_discrete_P", "solve_general_discrete_V", "ttpm_condition_block",
]
