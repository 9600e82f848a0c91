"""Optimal execution for general book shapes.

The optimum is characterised by a scalar Lagrange multiplier ``nu``: every
trade is expressed through the inverse of an increasing "h-function" evaluated
at ``nu``, and ``nu`` solves a scalar monotone equation enforcing the
liquidation constraint. Power-law shapes (the block shape included) have
closed-form h-functions; tabulated shapes are inverted numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .block_solver import DEFAULT_DENSITY, DEFAULT_SAMPLES, ConditionReport, _first_violation
from .cost_engine import ContinuousStrategy, DiscreteStrategy, _check_model, discrete_cost
from .errors import (ConditionViolated, DegenerateDenominator, NonMonotone,
                     RootBracketFailure)
from .lob_shape import Shape, monotone_pattern
from .market_model import GridCoefficients, MarketParams, TimeGrid, grid_coefficients, integrate

H_KINDS = ("V-discrete", "V-continuous", "P-discrete", "P-continuous")
ROOT_TOL = 1e-13


# ---------------------------------------------------------------------------
# Scalar monotone root finding
# ---------------------------------------------------------------------------

def solve_monotone(fun, target: float = 0.0, rtol: float = ROOT_TOL, max_doublings: int = 400):
    """Solve ``fun(x) = target`` for a monotone ``fun`` with ``fun(0) ~ 0``-type shape.

    Expands the bracket ``[-2^k, 2^k]`` until the sign changes, then runs
    Brent's method.
    """
    g = lambda x: fun(x) - target
    g0 = g(0.0)
    if g0 == 0.0:
        return 0.0
    lo, hi = -1.0, 1.0
    for _ in range(max_doublings):
        glo, ghi = g(lo), g(hi)
        if np.sign(glo) != np.sign(g0):
            lo, hi = lo, 0.0
            break
        if np.sign(ghi) != np.sign(g0):
            lo, hi = 0.0, hi
            break
        lo, hi = 2 * lo, 2 * hi
        if not (np.isfinite(glo) and np.isfinite(ghi)):
            break
    else:
        raise RootBracketFailure(f"no sign change found for target {target}")
    if not (np.isfinite(g(lo)) and np.isfinite(g(hi))):
        raise RootBracketFailure(f"non-finite values while bracketing target {target}")
    if np.sign(g(lo)) == np.sign(g(hi)):
        raise RootBracketFailure(f"no sign change found for target {target}")
    return brentq(g, lo, hi, xtol=1e-300, rtol=max(rtol, 4.5e-16), maxiter=500)


def _vec_solve_monotone(fun, target: np.ndarray, increasing: bool = True,
                        iters: int = 200) -> np.ndarray:
    """Elementwise bisection for ``fun(x)[k] = target[k]`` with ``fun`` monotone per entry."""
    target = np.asarray(target, dtype=float)
    s = 1.0 if increasing else -1.0
    lo = -np.ones_like(target)
    hi = np.ones_like(target)
    for _ in range(2100):
        need_lo = s * (fun(lo) - target) > 0
        need_hi = s * (fun(hi) - target) < 0
        if not (need_lo.any() or need_hi.any()):
            break
        lo = np.where(need_lo, 2 * lo, lo)
        hi = np.where(need_hi, 2 * hi, hi)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise RootBracketFailure("vectorised bracket expansion overflowed")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = s * (fun(mid) - target) < 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
        if np.all(hi - lo <= 1e-15 * (1 + np.abs(mid))):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# h-functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HFunction:
    """Marginal-cost map whose inverse at ``nu`` gives the optimal impact.

    Discrete kinds bind one interval's ``a``, ``a_tilde``/``a_hat``;
    continuous kinds bind ``rho`` and ``eta`` at one time.
    """

    kind: str
    shape: Shape
    a: float = 0.0
    a_tilde: float = 1.0
    a_hat: float = 1.0
    rho: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        if self.kind not in H_KINDS:
            raise ValueError(f"unknown h-function kind {self.kind!r}")

    # power-law closed forms: h = factor * F^{-1}(x) (V) or factor * x (P)
    def _factor(self) -> float:
        g = self.shape.gamma
        g1 = g + 1.0
        if self.kind == "V-discrete":
            return (1 - self.a * self.a_tilde ** (1 / g1)) / (1 - self.a)
        if self.kind == "V-continuous":
            return (self.rho * (2 + g) + self.eta) / (self.rho * g1)
        if self.kind == "P-discrete":
            den = self.a ** (-g) - self.a_hat
            if den == 0:
                raise DegenerateDenominator("f(x/a) - a_hat f(x) vanishes", 0.0)
            return (self.a ** (-g1) - self.a_hat) / den
        den = self.rho * g1 - self.eta
        if den == 0:
            raise DegenerateDenominator("rho (1 + x f'/f) - eta vanishes", 0.0)
        return (self.rho * (2 + g) - self.eta) / den

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        shape = self.shape
        if shape.is_power_law:
            k = self._factor()
            return k * (shape.F_inv(x) if self.kind.startswith("V") else x)
        if self.kind == "V-discrete":
            return (shape.F_inv(x) - self.a * shape.F_inv(self.a_tilde * x)) / (1 - self.a)
        if self.kind == "V-continuous":
            y = shape.F_inv(x)
            return y + (self.eta + self.rho) / self.rho * x / shape.f(y)
        if self.kind == "P-discrete":
            fa, f0 = shape.f(x / self.a), shape.f(x)
            den = fa - self.a_hat * f0
            if np.any(den <= 0):
                raise DegenerateDenominator("f(x/a) - a_hat f(x) <= 0",
                                            float(np.atleast_1d(x)[np.argmax(np.atleast_1d(den <= 0))]))
            return x * (fa / self.a - self.a_hat * f0) / den
        den = self.rho * (1 + shape.elasticity(x)) - self.eta
        if np.any(den == 0):
            raise DegenerateDenominator("rho (1 + x f'/f) - eta vanishes",
                                        float(np.atleast_1d(x)[np.argmax(np.atleast_1d(den == 0))]))
        return x * (1 + self.rho / den)

    def derivative(self, x, h: float = 1e-6):
        x = np.asarray(x, dtype=float)
        step = h * (1 + np.abs(x))
        return (self(x + step) - self(x - step)) / (2 * step)

    def is_increasing(self, x_max: float = 10.0, n: int = 401):
        xs = np.linspace(-x_max, x_max, n)
        vals = self(xs)
        d = np.diff(vals)
        if np.all(d > 0):
            return True, None
        if np.all(d < 0):
            return False, None
        k = int(np.argmax(d <= 0)) if d[0] > 0 else int(np.argmax(d >= 0))
        return None, (float(xs[k]), float(xs[k + 1]))

    def inverse(self, v):
        """``h^{-1}(v)``: closed form for power laws, bracketed root otherwise."""
        v = np.asarray(v, dtype=float)
        shape = self.shape
        if shape.is_power_law:
            k = self._factor()
            if k == 0:
                raise NonMonotone("h-function is identically zero")
            return shape.F(v / k) if self.kind.startswith("V") else v / k
        if v.ndim == 0:
            return np.asarray(solve_monotone(lambda z: float(self(z)), float(v)))
        return np.array([solve_monotone(lambda z: float(self(z)), float(u)) for u in v.ravel()]
                        ).reshape(v.shape)


def h_eval(h: HFunction, x):
    return h(x)


def h_invert(h: HFunction, v):
    if not h.shape.is_power_law:
        inc, pts = h.is_increasing()
        if inc is None:
            raise NonMonotone("h-function is not monotone on the sample grid", pts)
    return h.inverse(v)


# ---------------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------------

def _times(params, density):
    return np.linspace(0.0, params.T, int(density))


def assumption_check(shape: Shape, params: MarketParams, which: str,
                     density: int = 2001, x_max: float = 10.0) -> ConditionReport:
    """Sampled verification of the structural assumptions behind each condition.

    ``which`` is one of ``"volume_shape"``, ``"price_shape"``, ``"volume_h_monotone"``, ``"price_h_regime"``.
    """
    ts = _times(params, density)
    rho, eta = params.rho(ts), params.eta(ts)
    if which == "volume_shape":
        ok, w = monotone_pattern(shape, "peak", x_max)
        if not ok:
            return ConditionReport(which, False, w, "f unimodal (peak at 0)")
        w = _first_violation(ts, rho + eta)
        if w is not None:
            return ConditionReport(which, False, w, "rho+eta>=0", float((rho + eta).min()))
        return ConditionReport(which, True)
    if which == "price_shape":
        ok, w = monotone_pattern(shape, "valley", x_max)
        if not ok:
            return ConditionReport(which, False, w, "f valley (minimum at 0)")
        if np.any(rho - eta <= 0):
            k = int(np.argmax(rho - eta <= 0))
            return ConditionReport(which, False, float(ts[k]), "rho-eta>0",
                                   float((rho - eta).min()))
        xs = np.linspace(-x_max, x_max, 801)
        xs = xs[xs != 0]
        e = shape.elasticity(xs)
        en, ep = e[xs < 0], e[xs > 0]
        tol = 1e-9 * (1 + np.max(np.abs(e)))
        if np.any(np.diff(en) < -tol):
            return ConditionReport(which, False, float(xs[xs < 0][np.argmax(np.diff(en) < -tol)]),
                                   "x f'/f nondecreasing on R-")
        if np.any(np.diff(ep) > tol):
            return ConditionReport(which, False, float(xs[xs > 0][np.argmax(np.diff(ep) > tol)]),
                                   "x f'/f nonincreasing on R+")
        return ConditionReport(which, True)
    t_sub = ts[:: max(1, len(ts) // 101)]
    if which == "volume_h_monotone":
        for t in t_sub:
            h = HFunction("V-continuous", shape, rho=float(params.rho(t)), eta=float(params.eta(t)))
            inc, _ = h.is_increasing(x_max)
            if inc is not True:
                return ConditionReport(which, False, float(t), "h_V,t increasing")
        return ConditionReport(which, True)
    if which == "price_h_regime":
        xs = np.linspace(-x_max, x_max, 801)
        xs = xs[xs != 0]
        e = shape.elasticity(xs)
        cases = set()
        for t in t_sub:
            r, et = float(params.rho(t)), float(params.eta(t))
            c1 = r * (1 + e) - et
            c2 = r * (2 + e) - et
            h = HFunction("P-continuous", shape, rho=r, eta=et)
            if np.all(c1 > 0):
                inc, _ = h.is_increasing(x_max)
                if inc is True:
                    cases.add("i")
                    continue
            elif np.all(c1 < 0) and np.all(c2 > 0):
                inc, _ = h.is_increasing(x_max)
                if inc is False:
                    cases.add("ii")
                    continue
            return ConditionReport(which, False, float(t), "neither (i) nor (ii)")
        if len(cases) > 1:
            return ConditionReport(which, False, None, "mixed (i)/(ii) over time",
                                   details={"cases": sorted(cases)})
        return ConditionReport(which, True, details={"case": cases.pop()})
    raise ValueError(f"unknown assumption {which!r}")


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------

@dataclass
class GeneralSolution:
    nu: float
    strategy: DiscreteStrategy | ContinuousStrategy
    cost: float
    model: str
    zeta: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def trades(self) -> np.ndarray:
        s = self.strategy
        if isinstance(s, DiscreteStrategy):
            return s.xi
        return np.concatenate([[x for _, x in s.impulses], s.density])

    def to_dict(self) -> dict:
        s = self.strategy
        if isinstance(s, DiscreteStrategy):
            strat = {"times": s.times.tolist(), "xi": s.xi.tolist()}
        else:
            strat = {"xi0": s.xi0, "xiT": s.xiT,
                     "samples": np.column_stack([s.times, s.density]).tolist()}
        return {"nu": self.nu, "cost": self.cost, "model": self.model, "strategy": strat,
                "warnings": list(self.warnings)}


def _solve_nu(phi, x: float, rtol: float = ROOT_TOL) -> float:
    """Root of the increasing map ``phi(nu) = -x``."""
    if x == 0.0:
        return 0.0
    return solve_monotone(phi, -x, rtol)


def _assume(shape, params, which, warnings_):
    rep = assumption_check(shape, params, which)
    if not rep.holds:
        warnings_.append(f"{which} fails ({rep.failing_clause}, witness {rep.witness}); "
                         "uniqueness and sign guarantees are void")
    return rep


def solve_general_discrete_V(x: float, grid: TimeGrid, params: MarketParams, shape: Shape,
                             coeffs: GridCoefficients | None = None,
                             root_tol: float = ROOT_TOL) -> GeneralSolution:
    """Optimal discrete strategy in the volume-reversion model for any shape."""
    coeffs = coeffs or grid_coefficients(params, grid)
    warns: list = []
    rep = _assume(shape, params, "volume_shape", warns)
    a, at, lam = coeffs.a, coeffs.a_tilde, coeffs.lam
    inverses = _interval_inverses("V-discrete", shape, a, at)
    w = lam[:-1] * (1 - a)

    def phi(nu):
        return float(w @ inverses(nu) + lam[-1] * float(shape.F(nu)))

    nu = _solve_nu(phi, x, root_tol)
    inv = inverses(nu)
    N = len(a)
    xi = np.empty(N + 1)
    xi[0] = lam[0] * inv[0]
    xi[1:N] = lam[1:N] * inv[1:] - lam[:N - 1] * a[:N - 1] * inv[:-1]
    xi[N] = lam[N] * float(shape.F(nu)) - lam[N - 1] * a[N - 1] * inv[N - 1]
    xi = _absorb_residual(xi, x)
    strat = DiscreteStrategy(grid, xi, x)
    cost = discrete_cost(strat, "V", params, shape, coeffs=coeffs).cost
    return GeneralSolution(float(nu), strat, cost, "V", inv,
                           {"assumption": rep.to_dict()}, warns)


def solve_general_discrete_P(x: float, grid: TimeGrid, params: MarketParams, shape: Shape,
                             coeffs: GridCoefficients | None = None,
                             root_tol: float = ROOT_TOL) -> GeneralSolution:
    """Optimal discrete strategy in the price-reversion model for any shape."""
    coeffs = coeffs or grid_coefficients(params, grid)
    warns: list = []
    rep = _assume(shape, params, "price_shape", warns)
    a, ah, lam = coeffs.a, coeffs.a_hat, coeffs.lam
    inverses = _interval_inverses("P-discrete", shape, a, ah)

    def phi(nu):
        d = inverses(nu)
        return float(lam[-1] * float(shape.F(nu))
                     + np.sum(lam[:-1] * shape.F(d / a) - lam[1:] * shape.F(d)))

    nu = _solve_nu(phi, x, root_tol)
    d = inverses(nu)
    N = len(a)
    post = shape.F(d / a)
    xi = np.empty(N + 1)
    xi[0] = lam[0] * post[0]
    xi[1:N] = lam[1:N] * (post[1:] - shape.F(d[:-1]))
    xi[N] = lam[N] * (float(shape.F(nu)) - float(shape.F(d[-1])))
    xi = _absorb_residual(xi, x)
    strat = DiscreteStrategy(grid, xi, x)
    cost = discrete_cost(strat, "P", params, shape, coeffs=coeffs).cost
    return GeneralSolution(float(nu), strat, cost, "P", d, {"assumption": rep.to_dict()}, warns)


def _interval_inverses(kind: str, shape: Shape, a, other):
    """``nu -> [h_i^{-1}(nu)]`` over all grid intervals at once."""
    key = "a_tilde" if kind == "V-discrete" else "a_hat"
    hs = [HFunction(kind, shape, a=ai, **{key: oi}) for ai, oi in zip(a, other)]
    a, other = np.asarray(a), np.asarray(other)
    if shape.is_power_law:
        k = np.array([h._factor() for h in hs])
        if np.any(k == 0):
            raise NonMonotone("h-function is identically zero")
        if kind == "V-discrete":
            return lambda nu: shape.F(nu / k)
        return lambda nu: nu / k
    if kind == "V-discrete":
        def H(z):
            return (shape.F_inv(z) - a * shape.F_inv(other * z)) / (1 - a)
    else:
        def H(z):
            fa, f0 = shape.f(z / a), shape.f(z)
            return z * (fa / a - other * f0) / (fa - other * f0)
        z = np.linspace(-10.0, 10.0, 201)
        if np.any(shape.f(z[:, None] / a) - other * shape.f(z[:, None]) <= 0):
            raise DegenerateDenominator("f(x/a) - a_hat f(x) <= 0 on some interval", 0.0)

    def inverses(nu):
        if nu == 0.0:
            return np.zeros(len(a))
        return _vec_solve_monotone(H, np.full(len(a), float(nu)))
    return inverses


def _absorb_residual(xi, x):
    # the multiplier is exact only to root tolerance; spread the residual
    # proportionally so the liquidation constraint holds to roundoff
    resid = -x - xi.sum()
    s = np.abs(xi).sum()
    if s > 0 and abs(resid) <= 1e-10 * (1 + s):
        xi = xi + resid * np.abs(xi) / s
    return xi


# ---------------------------------------------------------------------------
# Continuous time
# ---------------------------------------------------------------------------

def _powerlaw_V_profile(params, gamma, ts):
    """``K_t`` and ``dK_t/dt`` for the power-law volume model."""
    g1 = gamma + 1
    rho, drho = params.rho(ts), params.rho_prime(ts)
    eta, deta = params.eta(ts), params.eta_prime(ts)
    den = rho * (2 + gamma) + eta
    r = rho * g1 / den
    dr = g1 * (drho * eta - rho * deta) / den ** 2
    return r ** g1, g1 * r ** gamma * dr, den


def _powerlaw_P_profile(params, gamma, ts):
    """``c_t`` with ``zeta_t = c_t nu`` and ``dc_t/dt`` for the power-law price model."""
    g1 = gamma + 1
    rho, drho = params.rho(ts), params.rho_prime(ts)
    eta, deta = params.eta(ts), params.eta_prime(ts)
    A, dA = rho * g1 - eta, drho * g1 - deta
    B, dB = rho * (2 + gamma) - eta, drho * (2 + gamma) - deta
    return A / B, (dA * B - A * dB) / B ** 2, A, B


def _signed_pow(c, p):
    return np.sign(c) * np.abs(c) ** p


def solve_general_continuous_V(x: float, params: MarketParams, shape: Shape,
                               samples: int = DEFAULT_SAMPLES, tol: float | None = None,
                               root_tol: float = ROOT_TOL) -> GeneralSolution:
    """Optimal continuous-time strategy in the volume-reversion model."""
    warns: list = []
    ts = np.linspace(0.0, params.T, int(samples))
    lam = params.lam(ts)
    lamT = float(params.lam(params.T))
    rho, eta = params.rho(ts), params.eta(ts)
    if shape.is_power_law:
        g = shape.gamma
        dense = _times(params, DEFAULT_DENSITY)
        _, _, den_dense = _powerlaw_V_profile(params, g, dense)
        if np.any(den_dense <= 0):
            k = int(np.argmax(den_dense <= 0))
            raise DegenerateDenominator(
                f"rho (2 + gamma) + eta <= 0 at t={dense[k]:.6g}: h_V,t not increasing",
                float(dense[k]))

        def kfun(t):
            return float(_powerlaw_V_profile(params, g, np.asarray(t))[0])

        Q = integrate(lambda t: float(params.lam(t)) * float(params.rho(t)) * kfun(t),
                      0.0, params.T, tol, points=params.kinks())
        nu = _solve_nu(lambda v: (Q + lamT) * float(shape.F(v)), x, root_tol)
        Fnu = float(shape.F(nu))
        K, dK, _ = _powerlaw_V_profile(params, g, ts)
        zeta = K * Fnu
        rate = lam * (dK * Fnu + (rho + eta) * zeta)

        def running(t):
            z = kfun(t) * Fnu
            r_, e_ = float(params.rho(t)), float(params.eta(t))
            return float(params.lam(t)) * ((r_ + e_) * float(shape.F_inv(z)) * z
                                          - e_ * float(shape.G(z)))

        cost = integrate(running, 0.0, params.T, tol, points=params.kinks()) \
            + lamT * float(shape.G(Fnu))
        diag = {"Q": Q, "closed_form": True}
    else:
        rep = assumption_check(shape, params, "volume_h_monotone")
        if not rep.holds:
            raise NonMonotone(f"h_V,t is not increasing at t={rep.witness}")
        warns.append("tabulated shape: continuous V solution is best-effort (f is only C^1)")
        k = (eta + rho) / rho

        def H(y):
            return y + k * shape.F(y) / shape.f(y)

        def zeta_of(v):
            y = _vec_solve_monotone(H, np.full_like(ts, v))
            return y, shape.F(y)

        def phi(v):
            _, z = zeta_of(v)
            return float(simpson(lam * rho * z, x=ts)) + lamT * float(shape.F(v))

        nu = _solve_nu(phi, x, root_tol)
        y, zeta = zeta_of(nu)
        dz = np.gradient(zeta, ts, edge_order=2)
        rate = lam * (dz + (rho + eta) * zeta)
        Fnu = float(shape.F(nu))
        running = lam * ((rho + eta) * y * zeta - eta * shape.F_tilde(y))
        cost = float(simpson(running, x=ts)) + lamT * float(shape.G(Fnu))
        diag = {"closed_form": False}
    xi0 = float(lam[0] * zeta[0])
    xiT = float(lamT * (Fnu - zeta[-1]))
    strat = ContinuousStrategy.from_parts(ts, rate, xi0, xiT, x, tol=1e-5)
    return GeneralSolution(float(nu), strat, float(cost), "V", zeta, diag, warns)


def solve_general_continuous_P(x: float, params: MarketParams, shape: Shape,
                               samples: int = DEFAULT_SAMPLES, tol: float | None = None,
                               root_tol: float = ROOT_TOL) -> GeneralSolution:
    """Optimal continuous-time strategy in the price-reversion model.

    Raises ConditionViolated when neither the increasing (i) nor the
    decreasing (ii) regime of the price h-function holds throughout.
    """
    warns: list = []
    ts = np.linspace(0.0, params.T, int(samples))
    lam = params.lam(ts)
    lamT = float(params.lam(params.T))
    rho, eta = params.rho(ts), params.eta(ts)
    if shape.is_power_law:
        g = shape.gamma
        g1 = g + 1
        dense = _times(params, DEFAULT_DENSITY)
        _, _, A, B = _powerlaw_P_profile(params, g, dense)
        if np.any(B <= 0):
            k = int(np.argmax(B <= 0))
            raise ConditionViolated("neither condition (i) nor (ii) holds", "i/ii",
                                    float(dense[k]))
        if np.all(A > 0):
            case = "i"
        elif np.all(A < 0):
            case = "ii"
        else:
            # zeta = c nu stays well defined where c changes sign
            case = "mixed"
            warns.append("rho(1+gamma)-eta changes sign: regimes (i) and (ii) alternate; "
                         "closed form used, uniqueness not guaranteed")

        def cfun(t):
            c, _, A_, _ = _powerlaw_P_profile(params, g, np.asarray(t))
            return float(c), float(A_)

        def q_integrand(t):
            c, A_ = cfun(t)
            return float(params.lam(t)) * A_ * float(_signed_pow(c, g1))

        Q = integrate(q_integrand, 0.0, params.T, tol, points=params.kinks())
        nu = _solve_nu(lambda v: (Q + lamT) * float(shape.F(v)), x, root_tol)
        c, dc, _, _ = _powerlaw_P_profile(params, g, ts)
        zeta = c * nu
        if nu == 0.0:
            rate = np.zeros_like(ts)
        else:
            rate = lam * shape.f(zeta) * nu * (dc + rho * c)

        def running(t):
            c_, _ = cfun(t)
            z = c_ * nu
            return float(params.lam(t)) * (float(params.rho(t)) * abs(z) ** (g + 2)
                                          - float(params.eta(t)) * float(shape.F_tilde(z)))

        cost = integrate(running, 0.0, params.T, tol, points=params.kinks()) \
            + lamT * float(shape.F_tilde(nu))
        diag = {"Q": Q, "closed_form": True, "case": case}
    else:
        rep = assumption_check(shape, params, "price_h_regime")
        if not rep.holds:
            raise ConditionViolated(f"price h-function conditions fail: {rep.failing_clause}",
                                    rep.failing_clause, rep.witness)
        case = rep.details.get("case", "i")
        warns.append("tabulated shape: continuous P solution is best-effort (f is only C^1)")

        def H(z):
            return z * (1 + rho / (rho * (1 + shape.elasticity(z)) - eta))

        def zeta_of(v):
            return _vec_solve_monotone(H, np.full_like(ts, v), increasing=(case == "i"))

        def phi(v):
            z = zeta_of(v)
            return float(simpson(lam * (rho * shape.xf(z) - eta * shape.F(z)), x=ts)) \
                + lamT * float(shape.F(v))

        nu = _solve_nu(phi, x, root_tol)
        zeta = zeta_of(nu)
        dz = np.gradient(zeta, ts, edge_order=2)
        rate = lam * shape.f(zeta) * (dz + rho * zeta)
        running = lam * (rho * shape.xf(zeta) * zeta - eta * shape.F_tilde(zeta))
        cost = float(simpson(running, x=ts)) + lamT * float(shape.F_tilde(nu))
        diag = {"closed_form": False, "case": case}
    if case == "ii":
        warns.append("decreasing h-function regime (ii): validated only against the oracle")
    Fnu = float(shape.F(nu))
    xi0 = float(lam[0] * shape.F(zeta[0]))
    xiT = float(lamT * (Fnu - shape.F(zeta[-1])))
    strat = ContinuousStrategy.from_parts(ts, rate, xi0, xiT, x, tol=1e-5)
    return GeneralSolution(float(nu), strat, float(cost), "P", zeta, diag, warns)


# ---------------------------------------------------------------------------
# Power-law manipulation conditions
# ---------------------------------------------------------------------------

def ttpm_rate_clause(params: MarketParams, gamma: float, model: str, ts,
                     printed: bool = False) -> np.ndarray:
    """Intermediate-trade no-TTPM clause for ``f = |x|**gamma``.

    Model V: ``(rho(1+g)/(rho(2+g)+eta))' + rho (rho+eta)/(rho(2+g)+eta)``.
    Model P: ``(A/B)' + rho A/B`` with ``A = rho(1+g)-eta``, ``B = rho(2+g)-eta``;
    ``printed=True`` uses ``rho(2+g)+eta`` in the second denominator instead.
    """
    ts = np.asarray(ts, dtype=float)
    rho, eta = params.rho(ts), params.eta(ts)
    if _check_model(model) == "V":
        g1 = gamma + 1
        drho, deta = params.rho_prime(ts), params.eta_prime(ts)
        den = rho * (2 + gamma) + eta
        dr = g1 * (drho * eta - rho * deta) / den ** 2
        return dr + rho * (rho + eta) / den
    c, dc, A, B = _powerlaw_P_profile(params, gamma, ts)
    if printed:
        return dc + rho * A / (rho * (2 + gamma) + eta)
    return dc + rho * c


def powerlaw_conditions(params: MarketParams, gamma: float, model: str,
                        density: int = DEFAULT_DENSITY, printed: bool = False) -> dict:
    """PMS and TTPM conditions for a power-law book, sampled on a dense grid."""
    if not gamma > -1:
        raise ValueError("gamma must exceed -1")
    _check_model(model)
    ts = _times(params, density)
    rho, eta = params.rho(ts), params.eta(ts)
    g1 = gamma + 1
    if model == "V":
        pms_vals, edge_vals = rho * (2 + gamma) + eta, rho + eta
    else:
        pms_vals, edge_vals = rho * (2 + gamma) - eta, rho * g1 - eta
    den = pms_vals
    if np.any(den == 0):
        raise DegenerateDenominator("PMS denominator vanishes", float(ts[np.argmax(den == 0)]))
    rate_vals = ttpm_rate_clause(params, gamma, model, ts, printed)
    out = {}
    for name, vals in (("pms", pms_vals), ("ttpm_edge", edge_vals), ("ttpm_rate", rate_vals)):
        w = _first_violation(ts, vals)
        out[name] = ConditionReport(f"{name}_powerlaw_{model}", w is None, w,
                                    None if w is None else name, float(vals.min()))
    out["pms_free"] = out["pms"].holds
    out["ttpm_free"] = out["pms"].holds and out["ttpm_edge"].holds and out["ttpm_rate"].holds
    return out
