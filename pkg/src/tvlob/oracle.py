"""Brute-force minimisers used to validate the closed-form solvers.

``oracle_block`` solves the equality-constrained quadratic programme of the
flat book directly. ``oracle_general`` runs projected gradient descent on the
liquidation hyperplane, with gradients from a backward recursion that is
checked against central finite differences before the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost_engine import DiscreteStrategy, _check_model, trade_cashflows
from .errors import SingularSystem
from .lob_shape import BlockShape, Shape
from .market_model import GridCoefficients, MarketParams, TimeGrid, grid_coefficients

GRAD_TOL = 1e-10
FD_AGREEMENT = 1e-6
STALL_ITERATIONS = 500


@dataclass
class OracleResult:
    xi: np.ndarray
    cost: float
    iterations: int
    converged: bool
    kkt_residual: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"xi": np.asarray(self.xi).tolist(), "cost": self.cost,
                "iterations": self.iterations, "converged": self.converged,
                "kkt_residual": self.kkt_residual, **self.diagnostics}


def impact_matrix(coeffs: GridCoefficients, model: str) -> np.ndarray:
    """Matrix ``M`` with flat-book cost ``xi^T M xi / 2``.

    ``M[i, j] = exp(-int_{t_i}^{t_j} rho) / lam(t_max(i,j))`` in model V and
    ``/ lam(t_min(i,j))`` in model P.
    """
    cum = np.concatenate([[0.0], np.cumsum(coeffs.alpha)])
    decay = np.exp(-np.abs(cum[:, None] - cum[None, :]))
    idx = np.arange(len(cum))
    pick = np.maximum if _check_model(model) == "V" else np.minimum
    return decay / coeffs.lam[pick(idx[:, None], idx[None, :])]


def _kkt_residual(g: np.ndarray) -> float:
    return float(np.max(np.abs(g - g.mean()))) if g.size else 0.0


def oracle_block(x: float, grid: TimeGrid, params: MarketParams, model: str,
                 coeffs: GridCoefficients | None = None) -> OracleResult:
    """Solve ``[M 1; 1^T 0] [xi; mu] = [0; -x]`` by LU with partial pivoting."""
    coeffs = coeffs or grid_coefficients(params, grid)
    M = impact_matrix(coeffs, model)
    n = M.shape[0]
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = M
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = -x
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"KKT system is singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("KKT solve produced non-finite values")
    xi = sol[:n]
    min_eig = float(np.linalg.eigvalsh(M)[0])
    return OracleResult(xi, float(xi @ M @ xi / 2), 1, True, _kkt_residual(M @ xi),
                        {"min_eigenvalue": min_eig, "negative_curvature": min_eig <= 0})


# ---------------------------------------------------------------------------
# General shapes
# ---------------------------------------------------------------------------

def analytic_gradient(xi, coeffs: GridCoefficients, model: str, shape: Shape) -> np.ndarray:
    """Gradient of the discrete cost by backward recursion over the grid."""
    xi = np.asarray(xi, dtype=float)
    a, lam = coeffs.a, coeffs.lam
    n = len(xi)
    g = np.empty(n)
    if _check_model(model) == "V":
        E = np.zeros(n)
        for i in range(1, n):
            E[i] = a[i - 1] * (E[i - 1] + xi[i - 1])
        post = shape.F_inv((E + xi) / lam)
        pre = shape.F_inv(E / lam)
        g[-1] = post[-1]
        for i in range(n - 2, -1, -1):
            g[i] = post[i] - a[i] * pre[i + 1] + a[i] * g[i + 1]
        return g
    ah = coeffs.a_hat
    D = np.zeros(n)
    u = np.zeros(n)
    for i in range(n):
        u[i] = float(shape.F_inv(xi[i] / lam[i] + shape.F(D[i])))
        if i + 1 < n:
            D[i + 1] = a[i] * u[i]
    g[-1] = u[-1]
    for i in range(n - 2, -1, -1):
        g[i] = u[i] + ah[i] * float(shape.f_ratio(u[i], a[i])) * (g[i + 1] - D[i + 1])
    return g


def _cost(xi, coeffs, model, shape) -> float:
    return float(trade_cashflows(xi, coeffs.a, coeffs.lam, model, shape).sum())


def finite_diff_gradient(strategy: DiscreteStrategy, model: str, params: MarketParams,
                         shape: Shape, h: float | None = None,
                         coeffs: GridCoefficients | None = None) -> np.ndarray:
    """Central-difference gradient of the discrete cost."""
    coeffs = coeffs or grid_coefficients(params, strategy.grid)
    xi = np.asarray(strategy.xi, dtype=float)
    h = 1e-6 * (1 + float(np.max(np.abs(xi)))) if h is None else h
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    g = np.empty_like(xi)
    for i in range(len(xi)):
        e = np.zeros_like(xi)
        e[i] = h
        g[i] = (_cost(xi + e, coeffs, model, shape) - _cost(xi - e, coeffs, model, shape)) / (2 * h)
    return g


def oracle_general(x: float, grid: TimeGrid, params: MarketParams, shape: Shape, model: str,
                   max_iter: int = 20000, tol: float = GRAD_TOL,
                   coeffs: GridCoefficients | None = None) -> OracleResult:
    """Projected gradient descent with Barzilai-Borwein steps and Armijo backtracking.

    Starts from the uniform strategy and stops when the gradient projected on
    ``sum(xi) = -x`` has norm below ``tol * (1 + |mean gradient|)``. Returns the
    best iterate with ``converged=False`` when ``max_iter`` is reached.
    """
    _check_model(model)
    coeffs = coeffs or grid_coefficients(params, grid)
    n = len(grid.times)
    xi = np.full(n, -x / n)
    g = analytic_gradient(xi, coeffs, model, shape)
    fd = finite_diff_gradient(DiscreteStrategy(grid, xi, x), model, params, shape, coeffs=coeffs)
    fd_err = float(np.max(np.abs(fd - g)) / (1 + np.max(np.abs(g))))
    c = _cost(xi, coeffs, model, shape)
    p = g - g.mean()
    step = 1.0 / (1.0 + float(np.max(np.abs(g))))
    it = 0
    converged = False
    best_pn, best_it = np.inf, 0
    for it in range(1, max_iter + 1):
        pn = float(np.linalg.norm(p))
        if pn < tol * (1 + abs(g.mean())):
            converged = True
            break
        slack = 1e-14 * (1 + abs(c))
        t = step
        for _ in range(60):
            cand = xi - t * p
            cc = _cost(cand, coeffs, model, shape)
            if np.isfinite(cc) and cc <= c - 1e-4 * t * pn * pn + slack:
                break
            t *= 0.5
        else:
            break
        if pn < 0.99 * best_pn:
            best_pn, best_it = pn, it
        elif it - best_it > STALL_ITERATIONS:
            # cost decreases are below roundoff: hand over to the Newton polish
            break
        g_new = analytic_gradient(cand, coeffs, model, shape)
        p_new = g_new - g_new.mean()
        s, y = cand - xi, p_new - p
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else 2 * t
        xi, c, g, p = cand, cc, g_new, p_new
    # restore the constraint exactly
    xi = xi - (xi.sum() + x) / n
    polish = 0
    if not converged:
        xi, converged, polish = _newton_polish(xi, coeffs, model, shape, tol)
    c = _cost(xi, coeffs, model, shape)
    g = analytic_gradient(xi, coeffs, model, shape)
    return OracleResult(xi, c, it, converged, _kkt_residual(g),
                        {"fd_gradient_error": fd_err, "gradient_mean": float(g.mean()),
                         "newton_steps": polish})


def _newton_polish(xi, coeffs, model, shape, tol, max_steps: int = 10):
    """Equality-constrained Newton steps on a finite-difference Hessian of the gradient.

    Used only when descent stalls on an ill-conditioned valley; a step is kept
    only if it shrinks the projected gradient.
    """
    n = len(xi)
    g = analytic_gradient(xi, coeffs, model, shape)
    pn = float(np.linalg.norm(g - g.mean()))
    for k in range(1, max_steps + 1):
        h = 1e-6 * (1 + float(np.max(np.abs(xi))))
        H = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            H[:, i] = (analytic_gradient(xi + e, coeffs, model, shape)
                       - analytic_gradient(xi - e, coeffs, model, shape)) / (2 * h)
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = 0.5 * (H + H.T)
        A[:n, n] = A[n, :n] = 1.0
        try:
            d = np.linalg.solve(A, np.concatenate([g.mean() - g, [0.0]]))[:n]
        except np.linalg.LinAlgError:
            return xi, False, k - 1
        cand = xi + d
        g_new = analytic_gradient(cand, coeffs, model, shape)
        pn_new = float(np.linalg.norm(g_new - g_new.mean()))
        if not pn_new < pn:
            return xi, False, k - 1
        xi, g, pn = cand, g_new, pn_new
        if pn < tol * (1 + abs(g.mean())):
            return xi, True, k
    return xi, False, max_steps


# ---------------------------------------------------------------------------
# Cross-validation campaigns
# ---------------------------------------------------------------------------

def random_scenario(rng: np.random.Generator, max_n: int = 10):
    """Random sinusoidal depth and constant resilience on a regular grid.

    Draws are repeated until the flat-book cost is positive definite in both
    models, so every instance has a unique optimum.
    """
    from .block_solver import pd_check_block
    from .market_model import Constant, Sinusoid

    while True:
        lam0 = rng.uniform(2.0, 6.0)
        lam = Sinusoid(lam0, rng.uniform(0.0, 0.5) * lam0, rng.uniform(0.5, 2 * np.pi),
                       rng.uniform(0.0, 2 * np.pi))
        params = MarketParams(lam, Constant(rng.uniform(0.5, 2.0)), 1.0)
        grid = TimeGrid.regular(1.0, int(rng.integers(1, max_n + 1)))
        x = float(rng.uniform(-10.0, 10.0))
        coeffs = grid_coefficients(params, grid)
        if pd_check_block(coeffs, "V")[0] and pd_check_block(coeffs, "P")[0]:
            return params, grid, x


def campaign(k: int, seed: int = 0, model: str = "V", shape: Shape | None = None,
             max_n: int = 6, start: int = 0) -> list[dict]:
    """Compare closed-form solutions with the oracles on ``k`` random instances."""
    from .block_solver import solve_block_discrete
    from .general_solver import solve_general_discrete_P, solve_general_discrete_V

    shape = shape or BlockShape()
    rows = []
    for j in range(start, start + k):
        rng = np.random.default_rng([seed, j])
        params, grid, x = random_scenario(rng, max_n)
        coeffs = grid_coefficients(params, grid)
        if isinstance(shape, BlockShape):
            sol = solve_block_discrete(x, grid, params, model, coeffs)
            orc = oracle_block(x, grid, params, model, coeffs)
            dev = float(np.max(np.abs(sol.trades() - orc.xi)) / (1 + np.max(np.abs(orc.xi))))
        else:
            solver = solve_general_discrete_V if model == "V" else solve_general_discrete_P
            sol = solver(x, grid, params, shape, coeffs)
            orc = oracle_general(x, grid, params, shape, model, coeffs=coeffs)
            dev = abs(sol.cost - orc.cost) / (1 + abs(orc.cost))
        rows.append({"seed": j, "N": grid.N, "x": x, "closed_cost": float(sol.cost),
                     "oracle_cost": float(orc.cost), "max_deviation": dev,
                     "converged": bool(orc.converged)})
    return rows
