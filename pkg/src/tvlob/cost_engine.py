"""Impact-state simulation and deterministic execution costs.

Two reversion models are supported:

* ``"V"``: the volume impact ``E`` decays, ``dE = -rho E dt``;
* ``"P"``: the price impact ``D`` decays, ``dD = -rho D dt``.

In both, ``E = lam(t) F(D)`` and a trade ``xi`` moves ``E`` to ``E + xi`` at
cash cost ``lam [G((E + xi)/lam) - G(E/lam)]`` (the unaffected-price term is
left out; pass ``s0`` to report the full cost ``-s0 x + C``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig
from .lob_shape import Shape
from .market_model import MarketParams, TimeGrid, grid_coefficients

MODELS = ("V", "P")


def _check_model(model: str) -> str:
    if model not in MODELS:
        raise InvalidConfig(f"model must be 'V' or 'P', got {model!r}")
    return model


@dataclass(frozen=True)
class DiscreteStrategy:
    """Trades ``xi[i]`` at ``grid.times[i]`` liquidating ``target`` shares.

    ``xi > 0`` buys, ``xi < 0`` sells; a liquidation satisfies
    ``target + sum(xi) = 0``.
    """

    grid: TimeGrid
    xi: np.ndarray
    target: float

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (len(self.grid.times),):
            raise InvalidConfig("one trade per grid point is required")
        if abs(self.target + xi.sum()) > 1e-9 * (1 + abs(self.target) + np.abs(xi).sum()):
            raise InvalidConfig(
                f"trades sum to {xi.sum():.12g}, expected {-self.target:.12g}")
        object.__setattr__(self, "xi", xi)

    @property
    def times(self):
        return self.grid.times


@dataclass(frozen=True)
class ContinuousStrategy:
    """Finitely many impulses plus a trading rate sampled on ``times``.

    The rate is linearly interpolated between samples. Impulse times must be
    sample times. Solver outputs carry impulses at ``0`` and ``T`` only.
    """

    times: np.ndarray
    density: np.ndarray
    impulses: tuple = ()
    target: float = 0.0
    tol: float = 1e-6

    def __post_init__(self):
        ts = np.asarray(self.times, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if ts.shape != dens.shape or len(ts) < 2 or ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise InvalidConfig("continuous strategy needs increasing samples starting at 0")
        imps = tuple((float(t), float(x)) for t, x in self.impulses)
        for t, _ in imps:
            if not np.any(ts == t):
                raise InvalidConfig(f"impulse time {t} is not a sample time")
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "impulses", imps)
        total = self.total()
        if abs(total + self.target) > self.tol * (1 + abs(self.target)):
            raise InvalidConfig(
                f"strategy trades {total:.10g} shares, expected {-self.target:.10g}")

    @classmethod
    def from_parts(cls, times, density, xi0, xiT, target, tol=1e-6):
        ts = np.asarray(times, dtype=float)
        return cls(ts, density, ((0.0, xi0), (float(ts[-1]), xiT)), target, tol)

    def _impulse_at(self, t):
        return sum(x for s, x in self.impulses if s == t)

    @property
    def xi0(self) -> float:
        return self._impulse_at(0.0)

    @property
    def xiT(self) -> float:
        return self._impulse_at(float(self.times[-1]))

    def continuous_volume(self) -> float:
        return float(np.trapezoid(self.density, self.times))

    def total(self) -> float:
        return sum(x for _, x in self.impulses) + self.continuous_volume()


@dataclass(frozen=True)
class ImpactState:
    E: float
    D: float
    t: float


@dataclass
class CostReport:
    model: str
    cost: float
    per_trade: list = field(default_factory=list)
    full_cost: float | None = None

    def to_dict(self) -> dict:
        d = {"model": self.model, "cost": self.cost,
             "per_trade": [dict(r) for r in self.per_trade]}
        if self.full_cost is not None:
            d["full_cost"] = self.full_cost
        return d


# ---------------------------------------------------------------------------
# Elementary moves
# ---------------------------------------------------------------------------

def state_at_rest(t: float = 0.0) -> ImpactState:
    return ImpactState(0.0, 0.0, t)


def propagate(state: ImpactState, t1: float, model: str, params: MarketParams,
              shape: Shape) -> ImpactState:
    """Let the impact revert, without trading, from ``state.t`` to ``t1``."""
    if t1 < state.t:
        raise ValueError("cannot propagate backwards in time")
    decay = np.exp(-params.int_rho(state.t, t1))
    lam1 = float(params.lam(t1))
    if _check_model(model) == "V":
        E = state.E * decay
        return ImpactState(E, float(shape.F_inv(E / lam1)), t1)
    D = state.D * decay
    return ImpactState(lam1 * float(shape.F(D)), D, t1)


def apply_trade(state: ImpactState, xi: float, params: MarketParams, shape: Shape):
    """Execute a market order of ``xi`` shares; return the new state and its cash cost."""
    lam = float(params.lam(state.t))
    if xi == 0.0:
        return state, 0.0
    E1 = state.E + xi
    cash = lam * (float(shape.G(E1 / lam)) - float(shape.G(state.E / lam)))
    return ImpactState(E1, float(shape.F_inv(E1 / lam)), state.t), cash


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------

def trade_cashflows(xi, a, lam, model: str, shape: Shape) -> np.ndarray:
    """Per-trade cash of trades ``xi`` given interval decays ``a`` and depths ``lam``.

    Array-level kernel behind :func:`discrete_cost`; ``a[k]`` is the decay
    over the interval ending at point ``k+1``.
    """
    xi = np.asarray(xi, dtype=float)
    n = len(xi)
    cash = np.empty(n)
    if _check_model(model) == "V":
        E = 0.0
        for i in range(n):
            if i:
                E *= a[i - 1]
            E1 = E + xi[i]
            cash[i] = lam[i] * (float(shape.G(E1 / lam[i])) - float(shape.G(E / lam[i])))
            E = E1
    else:
        D = 0.0
        for i in range(n):
            if i:
                D *= a[i - 1]
            E = lam[i] * float(shape.F(D))
            E1 = E + xi[i]
            cash[i] = lam[i] * (float(shape.G(E1 / lam[i])) - float(shape.G(E / lam[i])))
            D = float(shape.F_inv(E1 / lam[i]))
    return cash


def discrete_cost(strategy: DiscreteStrategy, model: str, params: MarketParams, shape: Shape,
                  s0: float | None = None, coeffs=None) -> CostReport:
    """Deterministic cost ``C^V`` or ``C^P`` of a discrete strategy, from rest."""
    coeffs = coeffs or grid_coefficients(params, strategy.grid)
    cash = trade_cashflows(strategy.xi, coeffs.a, coeffs.lam, model, shape)
    rows = [{"t": float(t), "xi": float(x), "cash": float(c)}
            for t, x, c in zip(strategy.times, strategy.xi, cash)]
    total = float(cash.sum())
    full = None if s0 is None else -s0 * strategy.target + total
    return CostReport(model, total, rows, full)


def discretize(strategy: ContinuousStrategy, n_steps: int | None = None) -> DiscreteStrategy:
    """Collapse a continuous strategy onto its sample grid.

    Each sample receives the trapezoid-weighted share of the rate plus any
    impulse at that time: a symmetric split of trading and reversion over each
    step, second-order accurate in the step size.
    """
    ts, dens = strategy.times, strategy.density
    if n_steps is not None:
        grid = np.linspace(0.0, ts[-1], int(n_steps))
        grid = np.union1d(grid, [t for t, _ in strategy.impulses])
        dens = np.interp(grid, ts, dens)
        ts = grid
    h = np.diff(ts)
    w = np.zeros_like(ts)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    xi = w * dens
    for t, x in strategy.impulses:
        xi[int(np.searchsorted(ts, t))] += x
    # absorb roundoff so the discrete invariant holds exactly
    target = -float(xi.sum())
    return DiscreteStrategy(TimeGrid(ts), xi, target)


def continuous_cost(strategy: ContinuousStrategy, model: str, params: MarketParams,
                    shape: Shape, n_steps: int | None = None,
                    s0: float | None = None) -> CostReport:
    """Cost of a continuous strategy (impulses plus a sampled trading rate)."""
    disc = discretize(strategy, n_steps)
    rep = discrete_cost(disc, model, params, shape)
    full = None if s0 is None else -s0 * strategy.target + rep.cost
    return CostReport(model, rep.cost, rep.per_trade, full)
