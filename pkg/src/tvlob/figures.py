"""Data and images for the two reference execution figures.

Both use a regular grid of 20 steps on ``[0, 1]``, ``rho = 1`` and
``lam(t) = 4 + cos(2 pi t)`` to buy 50 shares in model V. The first uses a
flat book, the second power-law books with ``gamma = -0.3`` and ``gamma = 1``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .block_solver import _continuous_profile, solve_block_discrete
from .general_solver import solve_general_discrete_V, ttpm_rate_clause
from .io import write_rows
from .lob_shape import PowerLawShape
from .market_model import Constant, MarketParams, Sinusoid, TimeGrid
from .plotting import strategy_figure

REFERENCE_X = -50.0
REFERENCE_N = 20
CURVE_POINTS = 401


def reference_params() -> MarketParams:
    return MarketParams(Sinusoid(4.0, 1.0, 2 * np.pi), Constant(1.0), 1.0)


def _merged_rows(times, trades, curve_t, clause_fn):
    """Grid rows carry trades; extra rows carry only the clause curve."""
    all_t = np.union1d(times, curve_t)
    trade_at = dict(zip(np.asarray(times).tolist(), np.asarray(trades).tolist()))
    clause = clause_fn(all_t)
    return [(t, trade_at.get(t), None, c) for t, c in zip(all_t.tolist(), clause.tolist())]


def figure1(out_dir, n: int = REFERENCE_N, x: float = REFERENCE_X, png: bool = True) -> dict:
    """Flat-book optimal strategy with the intermediate-trade clause curve."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = reference_params()
    grid = TimeGrid.regular(params.T, n)
    sol = solve_block_discrete(x, grid, params, "V")
    xi = sol.strategy.xi

    def clause(ts):
        return _continuous_profile(params, "V", ts)[2]

    curve_t = np.linspace(0.0, params.T, CURVE_POINTS)
    write_rows(out / "figure1.csv", _merged_rows(grid.times, xi, curve_t, clause))
    data = {"times": grid.times, "trades": xi, "curve_t": curve_t,
            "lam": params.lam(curve_t), "clause": clause(curve_t),
            "clause_at_grid": clause(grid.times), "cost": sol.cost,
            "bought": float(xi[xi > 0].sum()), "sold": float(xi[xi < 0].sum()),
            "csv": str(out / "figure1.csv")}
    if png:
        data["png"] = str(strategy_figure(out / "figure1.png", grid.times, xi, curve_t,
                                          data["lam"], data["clause"],
                                          "flat book, buy 50 shares"))
    return data


def figure2(out_dir, gammas=(-0.3, 1.0), n: int = REFERENCE_N, x: float = REFERENCE_X,
            png: bool = True) -> dict:
    """Power-law optimal strategies with the power-law intermediate-trade clause."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = reference_params()
    grid = TimeGrid.regular(params.T, n)
    curve_t = np.linspace(0.0, params.T, CURVE_POINTS)
    panels = {}
    for g in gammas:
        sol = solve_general_discrete_V(x, grid, params, PowerLawShape(g))
        xi = sol.strategy.xi

        def clause(ts, g=g):
            return ttpm_rate_clause(params, g, "V", ts)

        name = f"figure2_gamma{g:g}"
        write_rows(out / f"{name}.csv", _merged_rows(grid.times, xi, curve_t, clause))
        panel = {"times": grid.times, "trades": xi, "curve_t": curve_t,
                 "lam": params.lam(curve_t), "clause": clause(curve_t),
                 "clause_at_grid": clause(grid.times), "cost": sol.cost,
                 "csv": str(out / f"{name}.csv")}
        if png:
            # clip to the depth range so a huge clause stays off the plot
            lim = (-1.0, 1.2 * float(np.max(panel["lam"])))
            panel["png"] = str(strategy_figure(out / f"{name}.png", grid.times, xi, curve_t,
                                               panel["lam"], panel["clause"],
                                               f"power-law book, gamma = {g:g}", lim))
        panels[g] = panel
    return panels


def signs_follow_clause(panel: dict, x: float = REFERENCE_X) -> tuple[bool, list]:
    """Whether every trade at a grid time with a nonnegative clause has the sign of ``-x``.

    Returns ``(holds, offending_times)``.
    """
    xi = np.asarray(panel["trades"])
    cl = np.asarray(panel["clause_at_grid"])
    tol = 1e-9 * float(np.max(np.abs(xi)))
    bad = (cl >= 0) & (np.sign(-x) * xi < -tol)
    return not bad.any(), np.asarray(panel["times"])[bad].tolist()
