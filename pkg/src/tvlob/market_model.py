"""Time-varying market parameters: book depth, resilience and grid coefficients.

Depth ``lam(t)`` and resilience ``rho(t)`` are closed descriptors rather than
opaque callables, so that derivatives and integrals are analytic whenever the
descriptor allows it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _spi

from .errors import InvalidConfig, NonPositiveDepth, NonPositiveResilience, QuadratureFailure

DEFAULT_QUAD_TOL = 1e-12


# ---------------------------------------------------------------------------
# Time functions
# ---------------------------------------------------------------------------

class TimeFunction:
    """Deterministic scalar function of time with calculus helpers."""

    kind = "abstract"
    analytic_derivative = True

    def __call__(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def deriv2(self, t):
        raise NotImplementedError

    def integral(self, t0: float, t1: float) -> float:
        raise NotImplementedError

    def reversed(self, T: float) -> "TimeFunction":
        """Return ``s -> self(T - s)``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(TimeFunction):
    value: float
    kind = "constant"

    def __call__(self, t):
        return np.zeros_like(np.asarray(t, dtype=float)) + self.value

    def deriv(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def deriv2(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def integral(self, t0, t1):
        return self.value * (t1 - t0)

    def reversed(self, T):
        return self

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Sinusoid(TimeFunction):
    """``base + amplitude * cos(omega * t + phase)``."""

    base: float
    amplitude: float
    omega: float
    phase: float = 0.0
    kind = "sinusoid"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.base + self.amplitude * np.cos(self.omega * t + self.phase)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        return -self.amplitude * self.omega * np.sin(self.omega * t + self.phase)

    def deriv2(self, t):
        t = np.asarray(t, dtype=float)
        return -self.amplitude * self.omega ** 2 * np.cos(self.omega * t + self.phase)

    def integral(self, t0, t1):
        if self.omega == 0.0:
            return (self.base + self.amplitude * math.cos(self.phase)) * (t1 - t0)
        return self.base * (t1 - t0) + self.amplitude / self.omega * (
            math.sin(self.omega * t1 + self.phase) - math.sin(self.omega * t0 + self.phase)
        )

    def reversed(self, T):
        return Sinusoid(self.base, self.amplitude, self.omega, -self.omega * T - self.phase)

    def to_dict(self):
        d = {"kind": "sinusoid", "base": self.base, "amplitude": self.amplitude,
             "omega": self.omega}
        if self.phase:
            d["phase"] = self.phase
        return d


@dataclass(frozen=True)
class PiecewiseLinear(TimeFunction):
    """Linear interpolation between knots, constant beyond the end knots.

    Derivatives are one-sided (right-continuous) at knots.
    """

    knots: tuple
    kind = "piecewise_linear"
    analytic_derivative = False

    def __post_init__(self):
        knots = tuple((float(t), float(v)) for t, v in self.knots)
        if len(knots) < 2:
            raise InvalidConfig("piecewise_linear needs at least two knots")
        ts = [k[0] for k in knots]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidConfig("piecewise_linear knots must be strictly increasing in t")
        object.__setattr__(self, "knots", knots)

    @property
    def _t(self):
        return np.array([k[0] for k in self.knots])

    @property
    def _v(self):
        return np.array([k[1] for k in self.knots])

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self._t, self._v)

    def deriv(self, t):
        ts, vs = self._t, self._v
        slopes = np.diff(vs) / np.diff(ts)
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(ts, t, side="right") - 1
        inside = (idx >= 0) & (idx < len(slopes))
        # the last knot itself takes the left slope
        at_end = t == ts[-1]
        out = np.where(inside, slopes[np.clip(idx, 0, len(slopes) - 1)], 0.0)
        return np.where(at_end, slopes[-1], out)

    def deriv2(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def _antiderivative(self, t: float) -> float:
        ts, vs = self._t, self._v
        if t <= ts[0]:
            return vs[0] * (t - ts[0])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vs[1:] + vs[:-1]) * np.diff(ts))])
        if t >= ts[-1]:
            return cum[-1] + vs[-1] * (t - ts[-1])
        k = int(np.searchsorted(ts, t, side="right") - 1)
        vt = float(np.interp(t, ts, vs))
        return cum[k] + 0.5 * (vs[k] + vt) * (t - ts[k])

    def integral(self, t0, t1):
        return self._antiderivative(t1) - self._antiderivative(t0)

    def reversed(self, T):
        return PiecewiseLinear(tuple((T - t, v) for t, v in reversed(self.knots)))

    def to_dict(self):
        return {"kind": "piecewise_linear", "knots": [list(k) for k in self.knots]}


def time_function_from_dict(d: dict) -> TimeFunction:
    try:
        kind = d["kind"]
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind in ("sinusoid", "sinusoidal"):
            return Sinusoid(float(d["base"]), float(d["amplitude"]), float(d["omega"]),
                            float(d.get("phase", 0.0)))
        if kind == "piecewise_linear":
            return PiecewiseLinear(tuple(tuple(k) for k in d["knots"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"bad time function descriptor {d!r}: {exc}") from exc
    raise InvalidConfig(f"unknown time function kind {d.get('kind')!r}")


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def integrate(fn: Callable[[float], float], t0: float, t1: float,
              tol: float | None = None, points: Sequence[float] | None = None) -> float:
    """Adaptive quadrature of ``fn`` over ``[t0, t1]``.

    Raises QuadratureFailure when the requested accuracy cannot be met.
    """
    if t1 < t0:
        raise ValueError("integrate requires t0 <= t1")
    if t1 == t0:
        return 0.0
    tol = DEFAULT_QUAD_TOL if tol is None else tol
    pts = None
    if points is not None:
        pts = [p for p in points if t0 < p < t1] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", _spi.IntegrationWarning)
        try:
            val, err = _spi.quad(fn, t0, t1, epsabs=tol, epsrel=tol, limit=500, points=pts)
        except _spi.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not np.isfinite(val):
        raise QuadratureFailure("non-finite integral")
    if err > 100 * tol * (1.0 + abs(val)):
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} above tolerance")
    return float(val)


# ---------------------------------------------------------------------------
# Market parameters and grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarketParams:
    """Depth ``lam``, resilience ``rho`` and horizon ``T``."""

    lambda_fn: TimeFunction
    rho_fn: TimeFunction
    T: float = 1.0
    check_points: int = 1001

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidConfig("horizon T must be positive")
        self.validate(self.check_points)

    def validate(self, n_points: int) -> None:
        ts = np.linspace(0.0, self.T, max(int(n_points), 2))
        lam = self.lambda_fn(ts)
        if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
            k = int(np.argmax(~(lam > 0)))
            raise NonPositiveDepth(f"depth lambda(t) <= 0 at t={ts[k]:.6g}")
        rho = self.rho_fn(ts)
        if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
            k = int(np.argmax(~(rho > 0)))
            raise NonPositiveResilience(f"resilience rho(t) <= 0 at t={ts[k]:.6g}")

    def lam(self, t):
        return self.lambda_fn(t)

    def rho(self, t):
        return self.rho_fn(t)

    def eta(self, t):
        return self.lambda_fn.deriv(t) / self.lambda_fn(t)

    def eta_prime(self, t):
        lam = self.lambda_fn(t)
        return self.lambda_fn.deriv2(t) / lam - (self.lambda_fn.deriv(t) / lam) ** 2

    def rho_prime(self, t):
        return self.rho_fn.deriv(t)

    def int_rho(self, t0: float, t1: float) -> float:
        return self.rho_fn.integral(t0, t1)

    def int_eta(self, t0: float, t1: float) -> float:
        return math.log(float(self.lambda_fn(t1)) / float(self.lambda_fn(t0)))

    def kinks(self) -> list:
        """Knot times of piecewise descriptors, used as quadrature breakpoints."""
        out = []
        for fn in (self.lambda_fn, self.rho_fn):
            if isinstance(fn, PiecewiseLinear):
                out.extend(t for t, _ in fn.knots)
        return sorted(set(out))

    def reversed(self) -> "MarketParams":
        return MarketParams(self.lambda_fn.reversed(self.T), self.rho_fn.reversed(self.T),
                            self.T, self.check_points)

    def to_dict(self) -> dict:
        return {"lambda": self.lambda_fn.to_dict(), "rho": self.rho_fn.to_dict(), "T": self.T}

    @classmethod
    def from_dict(cls, d: dict) -> "MarketParams":
        try:
            return cls(time_function_from_dict(d["lambda"]), time_function_from_dict(d["rho"]),
                       float(d.get("T", 1.0)))
        except KeyError as exc:
            raise InvalidConfig(f"market params missing key {exc}") from exc


def eval_eta(params: MarketParams, t: float) -> float:
    """Relative growth rate of depth, ``lam'(t) / lam(t)``."""
    lam = float(params.lam(t))
    if lam <= 0:
        raise NonPositiveDepth(f"lambda({t}) = {lam} <= 0")
    return float(params.eta(t))


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.times, dtype=float)
        if ts.ndim != 1 or len(ts) < 2:
            raise InvalidConfig("a time grid needs at least two points")
        if ts[0] != 0.0:
            raise InvalidConfig("time grid must start at 0")
        if np.any(np.diff(ts) <= 0):
            raise InvalidConfig("time grid must be strictly increasing")
        ts.setflags(write=False)
        object.__setattr__(self, "times", ts)

    @classmethod
    def regular(cls, T: float, N: int) -> "TimeGrid":
        return cls(np.linspace(0.0, T, N + 1))

    @property
    def N(self) -> int:
        return len(self.times) - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def reversed(self) -> "TimeGrid":
        T = self.horizon
        ts = T - self.times[::-1]
        ts[0] = 0.0
        ts[-1] = T
        return TimeGrid(ts)


@dataclass(frozen=True)
class GridCoefficients:
    """Per-interval decay factors; index ``k`` holds interval ``k+1`` of the grid.

    ``a = exp(-int rho)``, ``a_tilde = a lam(t_{k-1}) / lam(t_k)`` and
    ``a_hat = a lam(t_k) / lam(t_{k-1})``. ``lam`` holds the depth at the
    N+1 grid points.
    """

    a: np.ndarray
    a_tilde: np.ndarray
    a_hat: np.ndarray
    alpha: np.ndarray
    lam: np.ndarray = field(default=None)

    @property
    def N(self) -> int:
        return len(self.a)


def grid_coefficients(params: MarketParams, grid: TimeGrid) -> GridCoefficients:
    params.validate(10 * grid.N + 1000)
    ts = grid.times
    alpha = np.array([params.int_rho(ts[k - 1], ts[k]) for k in range(1, len(ts))])
    a = np.exp(-alpha)
    lam = np.asarray(params.lam(ts), dtype=float)
    ratio = lam[:-1] / lam[1:]
    return GridCoefficients(a=a, a_tilde=a * ratio, a_hat=a / ratio, alpha=alpha, lam=lam)
