"""Detection of price manipulation strategies and of transaction-triggered manipulation.

A price manipulation strategy (PMS) is a round trip with negative expected
cost. :func:`search_pms` looks for one by scanning two-trade round trips
(buy ``x`` at ``t1``, sell ``x`` at ``t2``). Transaction-triggered
manipulation (TTPM) is certified when an optimal liquidation trades in both
directions, see :func:`classify_ttpm`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .cost_engine import DiscreteStrategy, _check_model, discrete_cost, trade_cashflows
from .lob_shape import Shape
from .market_model import MarketParams, TimeGrid

DEFAULT_T1_POINTS = 200
DEFAULT_GAP_FRACTIONS = (1e-3, 1e-2, 1e-1)
DEFAULT_X_FRACTIONS = (0.01, 0.1, 1.0)
PMS_THRESHOLD = 1e-9
SIGN_TOL = 1e-9


@dataclass
class ManipulationReport:
    """Verdicts of the PMS search and the TTPM classification.

    ``witness`` holds ``{t1, t2, x, cost}`` and the round-trip strategy when
    a negative-cost round trip was found.
    """

    pms_found: bool = False
    witness: dict | None = None
    ttpm_found: bool = False
    sign_summary: dict = field(default_factory=dict)
    note: str | None = None

    def to_dict(self) -> dict:
        d = {"pms_found": self.pms_found, "ttpm_found": self.ttpm_found,
             "sign_summary": dict(self.sign_summary)}
        if self.witness is not None:
            w = dict(self.witness)
            strat = w.pop("strategy", None)
            if strat is not None:
                w["times"] = strat.times.tolist()
                w["xi"] = strat.xi.tolist()
            d["witness"] = w
        if self.note:
            d["note"] = self.note
        return d


def round_trip(t1: float, t2: float, x: float) -> DiscreteStrategy:
    """Buy ``x`` at ``t1`` and sell it back at ``t2`` (a strategy with target 0)."""
    if not 0.0 <= t1 < t2:
        raise ValueError("round trip needs 0 <= t1 < t2")
    if t1 == 0.0:
        return DiscreteStrategy(TimeGrid([0.0, t2]), np.array([x, -x]), 0.0)
    return DiscreteStrategy(TimeGrid([0.0, t1, t2]), np.array([0.0, x, -x]), 0.0)


def round_trip_cost(t1, t2, x, model, params, shape) -> float:
    """Cost of :func:`round_trip` evaluated with the cost-engine kernel."""
    a = np.exp(-params.int_rho(t1, t2))
    lam = [float(params.lam(t1)), float(params.lam(t2))]
    return float(trade_cashflows([x, -x], [a], lam, model, shape).sum())


def search_pms(params: MarketParams, shape: Shape, model: str,
               t_grid_density: int = DEFAULT_T1_POINTS, x_grid=None, scale: float = 1.0,
               gaps=None, refine: bool = False) -> ManipulationReport:
    """Scan two-trade round trips for a negative cost.

    The lattice uses ``t_grid_density`` values of ``t1`` in ``[0, T)``, gaps
    ``t2 - t1`` in ``gaps`` (default ``T/1000, T/100, T/10``) and round-trip
    sizes ``+-x`` for ``x`` in ``x_grid`` (default ``(0.01, 0.1, 1) * scale``).
    With ``refine=True`` the best ``t1`` is sharpened by a bounded scalar
    minimisation at fixed gap and size.
    """
    _check_model(model)
    T = params.T
    gaps = [g * T for g in DEFAULT_GAP_FRACTIONS] if gaps is None else list(gaps)
    xs = [f * scale for f in DEFAULT_X_FRACTIONS] if x_grid is None else list(x_grid)
    sizes = [s * x for x in xs for s in (1.0, -1.0)]
    best = (0.0, None)
    for t1 in np.linspace(0.0, T, int(t_grid_density), endpoint=False):
        for gap in gaps:
            t2 = t1 + gap
            if t2 > T * (1 + 1e-12):
                continue
            t2 = min(t2, T)
            for x in sizes:
                c = round_trip_cost(t1, t2, x, model, params, shape)
                if c < best[0]:
                    best = (c, (float(t1), float(t2), float(x)))
    threshold = -PMS_THRESHOLD * scale ** 2
    if best[1] is None or best[0] >= threshold:
        return ManipulationReport(False, note="no negative round trip found on the lattice")
    t1, t2, x = best[1]
    if refine:
        gap = t2 - t1
        res = minimize_scalar(lambda s: round_trip_cost(s, s + gap, x, model, params, shape),
                              bounds=(max(0.0, t1 - gap), min(T - gap, t1 + gap)),
                              method="bounded", options={"xatol": 1e-10 * T})
        if res.fun < best[0]:
            t1, t2 = float(res.x), float(res.x) + gap
    strat = round_trip(t1, t2, x)
    cost = discrete_cost(strat, model, params, shape).cost
    return ManipulationReport(True, {"t1": t1, "t2": t2, "x": x, "cost": cost,
                                     "strategy": strat})


def _all_trades(solution) -> np.ndarray:
    return np.asarray(solution.trades(), dtype=float)


def classify_ttpm(solution, x: float) -> ManipulationReport:
    """Flag TTPM when an optimal liquidation of ``x`` trades against its own direction.

    Trades are impulses and rate samples; a trade counts as opposite when it
    has the sign of ``x`` and exceeds ``1e-9 * max|trade|`` in size.
    """
    trades = _all_trades(solution)
    big = float(np.max(np.abs(trades))) if trades.size else 0.0
    tol = SIGN_TOL * big
    pos = int(np.sum(trades > tol))
    neg = int(np.sum(trades < -tol))
    summary = {"positive": pos, "negative": neg, "total": int(trades.size)}
    if x == 0.0 or big == 0.0:
        return ManipulationReport(ttpm_found=False, sign_summary=summary)
    opposite = pos if x > 0 else neg
    return ManipulationReport(ttpm_found=opposite > 0, sign_summary=summary)
