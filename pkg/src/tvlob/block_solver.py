"""Closed-form optimal execution for a flat (block-shaped) book.

With ``f = 1`` both costs are quadratic forms ``xi^T M xi / 2`` and the
optimal strategy on a fixed grid is explicit. Letting the grid step go to zero
gives an initial block trade, a continuous trading rate and a final block
trade.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost_engine import ContinuousStrategy, DiscreteStrategy, _check_model
from .errors import DegenerateDenominator, NotPositiveDefinite
from .market_model import GridCoefficients, MarketParams, TimeGrid, grid_coefficients, integrate

DEFAULT_DENSITY = 10_000
DEFAULT_SAMPLES = 2001
COND_TOL = 1e-12


@dataclass
class ConditionReport:
    """Outcome of a sampled condition check.

    ``witness`` is the first violating time (or grid index, or price offset)
    and ``failing_clause`` names the clause that failed.
    """

    name: str
    holds: bool
    witness: float | int | None = None
    failing_clause: str | None = None
    min_value: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"name": self.name, "holds": bool(self.holds)}
        if self.witness is not None:
            d["witness"] = self.witness
        if self.failing_clause is not None:
            d["failing_clause"] = self.failing_clause
        if self.min_value is not None:
            d["min_value"] = self.min_value
        if self.details:
            d["details"] = self.details
        return d


@dataclass
class BlockSolution:
    strategy: DiscreteStrategy | ContinuousStrategy
    K: float
    cost: float
    model: str

    def trades(self) -> np.ndarray:
        """Every trade value: discrete trades, or impulses followed by rate samples."""
        s = self.strategy
        if isinstance(s, DiscreteStrategy):
            return s.xi
        return np.concatenate([[x for _, x in s.impulses], s.density])


# ---------------------------------------------------------------------------
# Discrete time
# ---------------------------------------------------------------------------

def pd_check_block(coeffs: GridCoefficients, model: str) -> tuple[bool, int | None]:
    """Positive definiteness of the cost quadratic form.

    Returns ``(holds, witness)`` with a 1-based interval index on failure.
    """
    other = coeffs.a_tilde if _check_model(model) == "V" else coeffs.a_hat
    bad = np.nonzero(coeffs.a * other >= 1.0)[0]
    if len(bad):
        return False, int(bad[0]) + 1
    return True, None


def _block_trades_V(a, at, lam):
    N = len(a)
    d = 1.0 - a * at
    xi = np.empty(N + 1)
    xi[0] = lam[0] * (1 - a[0]) / d[0]
    for i in range(1, N):
        xi[i] = lam[i] * (a[i] / d[i] * (at[i] - 1) + (1 - at[i - 1]) / d[i - 1])
    xi[N] = lam[N] * (1 - at[N - 1]) / d[N - 1]
    K = (lam[0] * (1 - 2 * a[0]) + lam[1]) / d[0] + np.sum(lam[2:] * (1 - at[1:]) ** 2 / d[1:])
    return xi, K


def _block_trades_P(a, ah, lam):
    N = len(a)
    d = 1.0 - a * ah
    xi = np.empty(N + 1)
    xi[0] = lam[0] * (1 - ah[0]) / d[0]
    for i in range(1, N):
        xi[i] = lam[i] * (a[i - 1] / d[i - 1] * (ah[i - 1] - 1) + (1 - ah[i]) / d[i])
    xi[N] = lam[N] * (1 - a[N - 1]) / d[N - 1]
    K = (lam[N] * (1 - 2 * a[N - 1]) + lam[N - 1]) / d[N - 1] \
        + np.sum(lam[:N - 1] * (1 - ah[:N - 1]) ** 2 / d[:N - 1])
    return xi, K


def solve_block_discrete(x: float, grid: TimeGrid, params: MarketParams, model: str,
                         coeffs: GridCoefficients | None = None) -> BlockSolution:
    """Optimal trades to liquidate ``x`` shares on ``grid`` in a flat book.

    Raises NotPositiveDefinite when some interval has ``a * a_tilde >= 1``
    (model V) or ``a * a_hat >= 1`` (model P).
    """
    coeffs = coeffs or grid_coefficients(params, grid)
    ok, witness = pd_check_block(coeffs, model)
    if not ok:
        raise NotPositiveDefinite(f"cost form not positive definite at interval {witness}",
                                  witness)
    if model == "V":
        w, K = _block_trades_V(coeffs.a, coeffs.a_tilde, coeffs.lam)
    else:
        w, K = _block_trades_P(coeffs.a, coeffs.a_hat, coeffs.lam)
    xi = -x / K * w
    strat = DiscreteStrategy(grid, xi, x)
    return BlockSolution(strat, float(K), x * x / (2 * K), model)


def discrete_sign_condition_block(coeffs: GridCoefficients, model: str):
    """Whether the optimal discrete strategy trades in one direction only.

    Returns ``(holds, witness)``; the witness is the 1-based index ``i`` of
    the failing inequality, or ``"end"`` for the boundary clause.
    """
    a = coeffs.a
    if _check_model(model) == "V":
        at = coeffs.a_tilde
        r = (1 - at) / (1 - a * at)
        for i in range(len(a) - 1):
            if r[i] < a[i + 1] * r[i + 1] - COND_TOL:
                return False, i + 1
        if at[-1] > 1.0 + COND_TOL:
            return False, "end"
        return True, None
    ah = coeffs.a_hat
    r = (1 - ah) / (1 - a * ah)
    for i in range(len(a) - 1):
        if r[i + 1] < a[i] * r[i] - COND_TOL:
            return False, i + 1
    if not ah[0] < 1.0:
        return False, "end"
    return True, None


# ---------------------------------------------------------------------------
# Continuous time
# ---------------------------------------------------------------------------

def _sample_times(T, density):
    return np.linspace(0.0, T, int(density))


def _ratio_and_derivative(num, dnum, den, dden):
    return num / den, (dnum * den - num * dden) / den ** 2


def _continuous_profile(params: MarketParams, model: str, ts):
    """Impact profile ``c(t)``, its derivative and the rate bracket ``c' + k c``."""
    rho, drho = params.rho(ts), params.rho_prime(ts)
    eta, deta = params.eta(ts), params.eta_prime(ts)
    if model == "V":
        den, dden = 2 * rho + eta, 2 * drho + deta
        c, dc = _ratio_and_derivative(rho, drho, den, dden)
        return c, dc, dc + (rho + eta) * c, den
    den, dden = 2 * rho - eta, 2 * drho - deta
    c, dc = _ratio_and_derivative(rho - eta, drho - deta, den, dden)
    return c, dc, dc + rho * c, den


def _check_denominator(params, model, ts):
    rho, eta = params.rho(ts), params.eta(ts)
    den = 2 * rho + eta if model == "V" else 2 * rho - eta
    if np.any(den <= 0):
        k = int(np.argmax(den <= 0))
        sign = "+" if model == "V" else "-"
        raise DegenerateDenominator(f"2 rho {sign} eta <= 0 at t={ts[k]:.6g}", float(ts[k]))


def block_normalizer_continuous(params: MarketParams, model: str,
                                tol: float | None = None) -> float:
    sign = 1.0 if model == "V" else -1.0

    def integrand(t):
        r = float(params.rho(t))
        return r * r * float(params.lam(t)) / (2 * r + sign * float(params.eta(t)))

    integral = integrate(integrand, 0.0, params.T, tol, points=params.kinks())
    edge = float(params.lam(params.T)) if model == "V" else float(params.lam(0.0))
    return edge + integral


def solve_block_continuous(x: float, params: MarketParams, model: str,
                           samples: int = DEFAULT_SAMPLES, density: int = DEFAULT_DENSITY,
                           tol: float | None = None) -> BlockSolution:
    """Optimal continuous-time strategy in a flat book.

    Returns exact impulses at 0 and T and the trading rate sampled on
    ``samples`` uniform points.
    """
    _check_model(model)
    _check_denominator(params, model, _sample_times(params.T, density))
    K = block_normalizer_continuous(params, model, tol)
    ts = _sample_times(params.T, samples)
    lam = params.lam(ts)
    _, _, bracket, _ = _continuous_profile(params, model, ts)
    rate = -x / K * lam * bracket
    c_end, _, _, _ = _continuous_profile(params, model, np.array([0.0, params.T]))
    lam0, lamT = float(params.lam(0.0)), float(params.lam(params.T))
    xi0 = -x / K * lam0 * c_end[0]
    xiT = -x / K * lamT * (1 - c_end[1])
    strat = ContinuousStrategy.from_parts(ts, rate, xi0, xiT, x)
    return BlockSolution(strat, float(K), x * x / (2 * K), model)


# ---------------------------------------------------------------------------
# Manipulation conditions
# ---------------------------------------------------------------------------

def _first_violation(ts, values, tol=COND_TOL):
    scale = 1.0 + float(np.max(np.abs(values)))
    bad = values < -tol * scale
    if bad.any():
        return float(ts[int(np.argmax(bad))])
    return None


def pms_condition_block(params: MarketParams, model: str,
                        density: int = DEFAULT_DENSITY) -> ConditionReport:
    """No price manipulation iff ``2 rho + eta >= 0`` (V) or ``2 rho - eta >= 0`` (P)."""
    _check_model(model)
    ts = _sample_times(params.T, density)
    rho, eta = params.rho(ts), params.eta(ts)
    vals = 2 * rho + eta if model == "V" else 2 * rho - eta
    w = _first_violation(ts, vals)
    return ConditionReport(f"pms_block_{model}", w is None, w,
                           None if w is None else "2rho+-eta", float(vals.min()))


def ttpm_clauses_block(params: MarketParams, model: str, ts) -> tuple[np.ndarray, np.ndarray]:
    """Values of the two no-TTPM clauses on ``ts``: boundary trade and rate."""
    _check_denominator(params, model, ts)
    rho, eta = params.rho(ts), params.eta(ts)
    _, _, bracket, _ = _continuous_profile(params, model, ts)
    edge = rho + eta if model == "V" else rho - eta
    return edge, bracket


def ttpm_condition_block(params: MarketParams, model: str,
                         density: int = DEFAULT_DENSITY) -> ConditionReport:
    """No transaction-triggered manipulation in a flat book, checked on a dense grid."""
    _check_model(model)
    ts = _sample_times(params.T, density)
    edge, bracket = ttpm_clauses_block(params, model, ts)
    w = _first_violation(ts, edge)
    if w is not None:
        return ConditionReport(f"ttpm_block_{model}", False, w,
                               "rho+eta" if model == "V" else "rho-eta", float(edge.min()))
    w = _first_violation(ts, bracket)
    if w is not None:
        return ConditionReport(f"ttpm_block_{model}", False, w, "rate", float(bracket.min()))
    return ConditionReport(f"ttpm_block_{model}", True, None, None,
                           float(min(edge.min(), bracket.min())))


def time_reversal_dual(grid: TimeGrid, params: MarketParams):
    """Reverse time: model P on ``(grid, params)`` is model V on the result."""
    return grid.reversed(), params.reversed()
