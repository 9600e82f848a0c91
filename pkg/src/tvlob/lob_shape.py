"""Order book shape ``f`` and its calculus.

For a shape ``f`` (density of limit orders at price offset ``x``)::

    F(x)       = int_0^x f
    F_tilde(x) = int_0^x y f(y) dy
    G(v)       = F_tilde(F^{-1}(v))       so that G' = F^{-1}

Block and power-law shapes use exact closed forms. Tabulated shapes
interpolate ``f`` with a monotone cubic (PCHIP) and extend it by constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import InvalidConfig, RootBracketFailure


class Shape:
    """Interface shared by all shapes. All evaluators accept arrays."""

    kind = "abstract"

    def f(self, x):
        raise NotImplementedError

    def df(self, x):
        raise NotImplementedError

    def F(self, x):
        raise NotImplementedError

    def F_inv(self, v):
        raise NotImplementedError

    def F_tilde(self, x):
        raise NotImplementedError

    def G(self, v):
        return self.F_tilde(self.F_inv(v))

    def xf(self, x):
        """``x f(x)``, finite at 0 even when ``f(0)`` is not."""
        x = np.asarray(x, dtype=float)
        return x * self.f(x)

    def elasticity(self, x):
        """``x f'(x) / f(x)``."""
        x = np.asarray(x, dtype=float)
        return x * self.df(x) / self.f(x)

    def f_ratio(self, x, a):
        """``f(a x) / f(x)``."""
        return self.f(a * np.asarray(x, dtype=float)) / self.f(x)

    @property
    def is_power_law(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLawShape(Shape):
    """``f(x) = |x|**gamma`` with ``gamma > -1``."""

    gamma: float
    kind = "power_law"

    def __post_init__(self):
        if not self.gamma > -1:
            raise InvalidConfig(f"power-law exponent must exceed -1, got {self.gamma}")

    @property
    def is_power_law(self):
        return True

    def f(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if self.gamma == 0:
            return np.ones_like(x)
        with np.errstate(divide="ignore"):
            return x ** self.gamma

    def df(self, x):
        x = np.asarray(x, dtype=float)
        if self.gamma == 0:
            return np.zeros_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.gamma * np.sign(x) * np.abs(x) ** (self.gamma - 1)

    def F(self, x):
        x = np.asarray(x, dtype=float)
        g1 = self.gamma + 1
        return np.sign(x) * np.abs(x) ** g1 / g1

    def F_inv(self, v):
        v = np.asarray(v, dtype=float)
        g1 = self.gamma + 1
        return np.sign(v) * (g1 * np.abs(v)) ** (1.0 / g1)

    def F_tilde(self, x):
        x = np.asarray(x, dtype=float)
        return np.abs(x) ** (self.gamma + 2) / (self.gamma + 2)

    def G(self, v):
        v = np.asarray(v, dtype=float)
        g1 = self.gamma + 1
        return (g1 * np.abs(v)) ** ((self.gamma + 2) / g1) / (self.gamma + 2)

    def xf(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.abs(x) ** (self.gamma + 1)

    def elasticity(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.gamma)

    def f_ratio(self, x, a):
        return np.ones_like(np.asarray(x, dtype=float)) * np.asarray(a, dtype=float) ** self.gamma

    def to_dict(self):
        return {"kind": "power_law", "gamma": self.gamma}


@dataclass(frozen=True)
class BlockShape(PowerLawShape):
    """Flat book, ``f = 1``."""

    gamma: float = 0.0
    kind = "block"

    def __post_init__(self):
        if self.gamma != 0.0:
            raise InvalidConfig("block shape has gamma = 0")

    def F(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def F_inv(self, v):
        return np.asarray(v, dtype=float) * 1.0

    def F_tilde(self, x):
        return 0.5 * np.asarray(x, dtype=float) ** 2

    def G(self, v):
        return 0.5 * np.asarray(v, dtype=float) ** 2

    def to_dict(self):
        return {"kind": "block"}


class TabulatedShape(Shape):
    """Shape given by samples ``(x_k, f_k)`` on a range containing 0.

    ``f`` is PCHIP-interpolated (which keeps it positive) and held constant
    beyond the sample range, so ``F`` diverges linearly at both ends.
    """

    kind = "tabulated"

    def __init__(self, x, f):
        x = np.asarray(x, dtype=float)
        fv = np.asarray(f, dtype=float)
        if x.ndim != 1 or x.shape != fv.shape or len(x) < 3:
            raise InvalidConfig("tabulated shape needs matching x and f arrays of length >= 3")
        if np.any(np.diff(x) <= 0):
            raise InvalidConfig("tabulated x must be strictly increasing")
        if not (x[0] < 0 < x[-1]):
            raise InvalidConfig("tabulated range must contain 0 in its interior")
        if np.any(fv <= 0) or not np.all(np.isfinite(fv)):
            raise InvalidConfig("tabulated f must be positive and finite")
        self.x = x
        self.fk = fv
        self._p = PchipInterpolator(x, fv, extrapolate=False)
        self._dp = self._p.derivative()
        a1 = self._p.antiderivative(1)
        a2 = self._p.antiderivative(2)
        a10, a20 = float(a1(0.0)), float(a2(0.0))
        self._xl, self._xr = float(x[0]), float(x[-1])
        near = self._near_zero_polys()
        self._F_in = lambda y: self._blend(y, near, 0, a1(y) - a10)
        self._I_in = lambda y: self._blend(y, near, 1, a2(y) - a20 - a10 * y)
        self._Ft_near = lambda y: self._blend(y, near, 2, None)
        self._near_lo, self._near_hi = near[0][0], near[1][1]
        self._f0 = float(self._p(0.0))
        self._table = None
        self._fl, self._fr = float(fv[0]), float(fv[-1])
        self._Fl, self._Fr = float(self._F_in(self._xl)), float(self._F_in(self._xr))
        self._Il, self._Ir = float(self._I_in(self._xl)), float(self._I_in(self._xr))

    def _near_zero_polys(self):
        """Pieces touching 0 re-expanded about 0, so small arguments keep full precision.

        Returns ``[(lo, hi, (F, int F, F_tilde)), ...]`` as polynomials in ``y``.
        """
        x = self.x
        right = int(np.searchsorted(x, 0.0, side="right")) - 1
        left = int(np.searchsorted(x, 0.0, side="left")) - 1
        out = []
        for k, lo, hi in ((left, float(x[left]), 0.0), (right, 0.0, float(x[right + 1]))):
            piece = Polynomial(self._p.c[::-1, k])(Polynomial([-x[k], 1.0]))
            F = piece.integ(lbnd=0.0)
            out.append((lo, hi, (F, F.integ(lbnd=0.0),
                                 (Polynomial([0.0, 1.0]) * piece).integ(lbnd=0.0))))
        return out

    @staticmethod
    def _blend(y, near, which, far):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y) if far is None else np.array(far, dtype=float, copy=True)
        for lo, hi, polys in near:
            m = (y >= lo) & (y <= hi)
            if np.any(m):
                out = np.where(m, polys[which](y), out)
        return out

    def __eq__(self, other):
        return (isinstance(other, TabulatedShape) and np.array_equal(self.x, other.x)
                and np.array_equal(self.fk, other.fk))

    def __hash__(self):
        return hash((self.x.tobytes(), self.fk.tobytes()))

    def __repr__(self):
        return f"TabulatedShape(n={len(self.x)}, range=[{self._xl}, {self._xr}])"

    def f(self, x):
        x = np.asarray(x, dtype=float)
        inner = self._p(np.clip(x, self._xl, self._xr))
        return np.where(x < self._xl, self._fl, np.where(x > self._xr, self._fr, inner))

    def df(self, x):
        x = np.asarray(x, dtype=float)
        inner = self._dp(np.clip(x, self._xl, self._xr))
        return np.where((x < self._xl) | (x > self._xr), 0.0, inner)

    def F(self, x):
        x = np.asarray(x, dtype=float)
        inner = self._F_in(np.clip(x, self._xl, self._xr))
        left = self._Fl + self._fl * (x - self._xl)
        right = self._Fr + self._fr * (x - self._xr)
        return np.where(x < self._xl, left, np.where(x > self._xr, right, inner))

    def _int_F(self, x):
        x = np.asarray(x, dtype=float)
        inner = self._I_in(np.clip(x, self._xl, self._xr))
        dl, dr = x - self._xl, x - self._xr
        left = self._Il + self._Fl * dl + 0.5 * self._fl * dl ** 2
        right = self._Ir + self._Fr * dr + 0.5 * self._fr * dr ** 2
        return np.where(x < self._xl, left, np.where(x > self._xr, right, inner))

    def F_tilde(self, x):
        x = np.asarray(x, dtype=float)
        # integration by parts: int_0^x y f(y) dy = x F(x) - int_0^x F
        far = x * self.F(x) - self._int_F(x)
        near = (x >= self._near_lo) & (x <= self._near_hi)
        return np.where(near, self._Ft_near(x), far)

    def _F_inv_scalar(self, v: float) -> float:
        if v == 0.0:
            return 0.0
        if v <= self._Fl:
            return self._xl + (v - self._Fl) / self._fl
        if v >= self._Fr:
            return self._xr + (v - self._Fr) / self._fr
        if abs(v) < 1e-250:
            # F is linear to machine precision this close to 0
            return v / self._f0
        lo, hi = (0.0, self._xr) if v > 0 else (self._xl, 0.0)
        try:
            return brentq(lambda y: float(self._F_in(y)) - v, lo, hi, maxiter=300,
                          xtol=max(1e-300, 1e-17 * abs(v) / float(self.fk.max())),
                          rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise RootBracketFailure(f"F^-1({v}) not bracketed") from exc

    def _F_inv_vec(self, v: np.ndarray) -> np.ndarray:
        # start from a dense inverse table, then safeguarded Newton (F' = f > 0)
        if self._table is None:
            ys = np.linspace(self._xl, self._xr, 4097)
            self._table = (self._F_in(ys), ys)
        Fs, ys = self._table
        k = np.clip(np.searchsorted(Fs, v), 1, len(ys) - 1)
        lo, hi = ys[k - 1], ys[k]
        # keep the root on the side of 0 given by the sign of v
        lo = np.where(v > 0, np.maximum(lo, 0.0), lo)
        hi = np.where(v < 0, np.minimum(hi, 0.0), hi)
        y = np.interp(v, Fs, ys)
        y = np.clip(y, lo, hi)
        for _ in range(8):
            r = self._F_in(y) - v
            lo = np.where(r < 0, y, lo)
            hi = np.where(r > 0, y, hi)
            step = y - r / self._p(y)
            y_new = np.where((step > lo) & (step < hi), step, 0.5 * (lo + hi))
            if np.all(np.abs(y_new - y) <= 4 * np.finfo(float).eps * np.abs(y_new)):
                return y_new
            y = y_new
        return y

    def F_inv(self, v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 0:
            return np.asarray(self._F_inv_scalar(float(v)))
        out = np.where(v <= self._Fl, self._xl + (v - self._Fl) / self._fl,
                       self._xr + (v - self._Fr) / self._fr)
        inside = (v > self._Fl) & (v < self._Fr)
        if inside.any():
            out[inside] = self._F_inv_vec(v[inside])
        tiny = np.abs(v) < 1e-250
        out[tiny] = v[tiny] / self._f0
        return out

    def to_dict(self):
        return {"kind": "tabulated", "x": self.x.tolist(), "f": self.fk.tolist()}


def shape_from_dict(d: dict) -> Shape:
    kind = d.get("kind")
    try:
        if kind == "block":
            return BlockShape()
        if kind == "power_law":
            return PowerLawShape(float(d["gamma"]))
        if kind == "tabulated":
            return TabulatedShape(d["x"], d["f"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"bad shape descriptor {d!r}: {exc}") from exc
    raise InvalidConfig(f"unknown shape kind {kind!r}")


def shape_F(shape: Shape, x: float) -> float:
    return float(shape.F(x))


def shape_F_inv(shape: Shape, v: float) -> float:
    return float(shape.F_inv(v))


def shape_G(shape: Shape, v: float) -> float:
    return float(shape.G(v))


def monotone_pattern(shape: Shape, pattern: str, x_max: float = 10.0, n: int = 801):
    """Check a monotonicity pattern of ``f`` on a symmetric sample grid.

    ``pattern`` is ``"peak"`` (nondecreasing on R-, nonincreasing on R+) or
    ``"valley"`` (the reverse). Returns ``(holds, witness_x)``.
    """
    xs = np.linspace(-x_max, x_max, n)
    xs = xs[xs != 0.0]
    neg, pos = xs[xs < 0], xs[xs > 0]
    fn, fp = shape.f(neg), shape.f(pos)
    tol = 1e-12 * (1.0 + np.max(np.abs(np.concatenate([fn, fp]))))
    if pattern == "peak":
        bad_n = np.diff(fn) < -tol
        bad_p = np.diff(fp) > tol
    elif pattern == "valley":
        bad_n = np.diff(fn) > tol
        bad_p = np.diff(fp) < -tol
    else:
        raise ValueError(pattern)
    if bad_n.any():
        return False, float(neg[int(np.argmax(bad_n))])
    if bad_p.any():
        return False, float(pos[int(np.argmax(bad_p))])
    return True, None
