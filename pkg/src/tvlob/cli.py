"""Command-line front end.

Exit codes: 0 success, 1 invalid configuration, 2 violated mathematical
precondition, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import block_solver as bs
from . import general_solver as gs
from .cost_engine import ContinuousStrategy, continuous_cost, discrete_cost
from .errors import InvalidConfig, LOBError
from .figures import figure1, figure2, signs_follow_clause
from .io import Scenario, load_scenario, read_strategy_csv, write_json, write_strategy_csv
from .lob_shape import BlockShape
from .manipulation import classify_ttpm, search_pms
from .market_model import grid_coefficients
from .oracle import campaign, oracle_block, oracle_general

log = logging.getLogger("tvlob")


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if getattr(args, "model", None):
        sc.model = args.model
    if getattr(args, "mode", None):
        sc.mode = args.mode
    Scenario.__post_init__(sc)
    return sc


def _solve(sc: Scenario, args):
    """Dispatch to the closed-form solver matching the scenario."""
    samples = args.samples
    if samples < 3:
        raise InvalidConfig("--samples must be at least 3")
    if sc.mode == "discrete":
        coeffs = grid_coefficients(sc.params, sc.grid)
        if sc.is_block:
            return bs.solve_block_discrete(sc.x, sc.grid, sc.params, sc.model, coeffs)
        solver = gs.solve_general_discrete_V if sc.model == "V" else gs.solve_general_discrete_P
        return solver(sc.x, sc.grid, sc.params, sc.shape, coeffs, root_tol=args.root_tol)
    if sc.is_block:
        return bs.solve_block_continuous(sc.x, sc.params, sc.model, samples,
                                         args.grid_density, args.quad_tol)
    solver = gs.solve_general_continuous_V if sc.model == "V" else gs.solve_general_continuous_P
    return solver(sc.x, sc.params, sc.shape, samples, args.quad_tol, root_tol=args.root_tol)


def _engine_cost(strategy, sc: Scenario) -> float:
    if isinstance(strategy, ContinuousStrategy):
        return continuous_cost(strategy, sc.model, sc.params, sc.shape).cost
    return discrete_cost(strategy, sc.model, sc.params, sc.shape).cost


def cmd_solve(args) -> dict:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    sol = _solve(sc, args)
    out = Path(args.out)
    write_strategy_csv(out / "strategy.csv", sol.strategy)
    engine = _engine_cost(sol.strategy, sc)
    trades = sol.trades()
    report = {"model": sc.model, "mode": sc.mode, "x": sc.x, "cost": sol.cost,
              "engine_cost": engine,
              "bought": float(trades[trades > 0].sum()) if sc.mode == "discrete" else None,
              "sold": float(trades[trades < 0].sum()) if sc.mode == "discrete" else None,
              "ttpm": _ttpm_summary(sol, sc.x)}
    if sc.s0 is not None:
        report["full_cost"] = -sc.s0 * sc.x + engine
    if isinstance(sol, bs.BlockSolution):
        report["K"] = sol.K
    else:
        report.update(nu=sol.nu, warnings=sol.warnings)
    if isinstance(sol.strategy, ContinuousStrategy):
        report.update(xi0=sol.strategy.xi0, xiT=sol.strategy.xiT)
    write_json(out / "solution.json", report)
    return report


def _ttpm_summary(sol, x) -> dict:
    rep = classify_ttpm(sol, x)
    return {"ttpm_found": rep.ttpm_found, "sign_summary": rep.sign_summary}


def cmd_cost(args) -> dict:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    strat = read_strategy_csv(args.strategy, sc.x)
    if isinstance(strat, ContinuousStrategy):
        rep = continuous_cost(strat, sc.model, sc.params, sc.shape, s0=sc.s0)
    else:
        rep = discrete_cost(strat, sc.model, sc.params, sc.shape, s0=sc.s0)
    d = rep.to_dict()
    write_json(Path(args.out) / "cost.json", d)
    return {k: v for k, v in d.items() if k != "per_trade"}


def cmd_check(args) -> dict:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    density = args.grid_density
    res = {"model": sc.model}
    if sc.grid is not None:
        coeffs = grid_coefficients(sc.params, sc.grid)
        ok, w = bs.pd_check_block(coeffs, sc.model)
        res["positive_definite"] = {"holds": ok, "witness": w}
        if sc.is_block:
            ok, w = bs.discrete_sign_condition_block(coeffs, sc.model)
            res["discrete_sign"] = {"holds": ok, "witness": w}
    if sc.is_block:
        res["pms"] = bs.pms_condition_block(sc.params, sc.model, density).to_dict()
        try:
            res["ttpm"] = bs.ttpm_condition_block(sc.params, sc.model, density).to_dict()
        except LOBError as exc:
            res["ttpm"] = {"holds": False, "error": str(exc)}
    elif sc.shape.is_power_law:
        pc = gs.powerlaw_conditions(sc.params, sc.shape.gamma, sc.model, density)
        res["pms"] = pc["pms"].to_dict()
        res["ttpm"] = {"holds": pc["ttpm_free"],
                       "clauses": [pc[k].to_dict() for k in ("pms", "ttpm_edge", "ttpm_rate")]}
    else:
        res["pms"] = {"holds": None, "note": "no necessary and sufficient condition for this shape"}
    relevant = (("volume_shape", "volume_h_monotone") if sc.model == "V"
                else ("price_shape", "price_h_regime"))
    res["assumptions"] = {w: gs.assumption_check(sc.shape, sc.params, w).to_dict()
                          for w in relevant}
    verdicts = [v for v in res.values() if isinstance(v, dict) and "holds" in v]
    verdicts += list(res["assumptions"].values())
    res["all_hold"] = all(bool(v["holds"]) for v in verdicts)
    write_json(Path(args.out) / "check.json", res)
    return res


def cmd_pms_search(args) -> dict:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    scale = abs(sc.x) if sc.x else 1.0
    rep = search_pms(sc.params, sc.shape, sc.model, args.t_points, scale=scale,
                     refine=args.refine)
    out = Path(args.out)
    if rep.witness is not None:
        write_strategy_csv(out / "witness.csv", rep.witness["strategy"])
    d = rep.to_dict()
    if not sc.is_block and not sc.shape.is_power_law and not rep.pms_found:
        d["note"] = "no witness found"
    write_json(out / "manipulation.json", d)
    return d


def cmd_oracle(args) -> dict:
    out = Path(args.out)
    if args.campaign:
        sc = _apply_overrides(load_scenario(args.scenario), args) if args.scenario else None
        shape = sc.shape if sc else BlockShape()
        model = sc.model if sc else (args.model or "V")
        chunks = _split(args.campaign, args.workers)
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            futs = [ex.submit(_campaign_chunk, lo, hi, args.seed, model, shape) for lo, hi in chunks]
            rows = [r for f in futs for r in f.result()]
        write_rows_campaign(out / "campaign.csv", rows)
        d = {"instances": len(rows), "max_deviation": max(r["max_deviation"] for r in rows),
             "all_converged": all(r["converged"] for r in rows)}
        write_json(out / "oracle.json", d)
        return d
    if not args.scenario:
        raise InvalidConfig("oracle needs a scenario or --campaign")
    sc = _apply_overrides(load_scenario(args.scenario), args)
    if sc.grid is None:
        raise InvalidConfig("oracle works on a discrete grid")
    coeffs = grid_coefficients(sc.params, sc.grid)
    if sc.is_block:
        orc = oracle_block(sc.x, sc.grid, sc.params, sc.model, coeffs)
    else:
        orc = oracle_general(sc.x, sc.grid, sc.params, sc.shape, sc.model, coeffs=coeffs)
    sc.mode = "discrete"
    sol = _solve(sc, args)
    d = orc.to_dict()
    d["closed_form_cost"] = sol.cost
    d["strategy_deviation"] = float(np.max(np.abs(sol.trades() - orc.xi)))
    d["cost_deviation"] = abs(sol.cost - orc.cost) / (1 + abs(orc.cost))
    write_json(out / "oracle.json", d)
    return d


def _split(k, workers):
    workers = max(1, min(workers, k))
    edges = np.linspace(0, k, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _campaign_chunk(lo, hi, seed, model, shape):
    return campaign(hi - lo, seed, model, shape, start=lo)


def write_rows_campaign(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_figure1(args) -> dict:
    d = figure1(args.out, png=not args.no_png)
    return {"bought": d["bought"], "sold": d["sold"], "cost": d["cost"], "csv": d["csv"],
            "png": d.get("png")}


def cmd_figure2(args) -> dict:
    panels = figure2(args.out, tuple(args.gamma), png=not args.no_png)
    return {f"{g:g}": {"cost": p["cost"], "csv": p["csv"], "png": p.get("png"),
                       "signs_follow_clause": signs_follow_clause(p)[0]}
            for g, p in panels.items()}


COMMANDS = {"solve": cmd_solve, "cost": cmd_cost, "check": cmd_check,
            "pms-search": cmd_pms_search, "oracle": cmd_oracle,
            "figure1": cmd_figure1, "figure2": cmd_figure2}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--model", choices=("V", "P"), help="override the scenario model")
    common.add_argument("--mode", choices=("discrete", "continuous"),
                        help="override the scenario mode")
    common.add_argument("--samples", type=int, default=bs.DEFAULT_SAMPLES,
                        help="time samples of continuous solutions")
    common.add_argument("--quad-tol", type=float, default=None, help="quadrature tolerance")
    common.add_argument("--root-tol", type=float, default=gs.ROOT_TOL,
                        help="relative tolerance of the multiplier solve")
    common.add_argument("--grid-density", type=int, default=bs.DEFAULT_DENSITY,
                        help="sample points for condition checks")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tvlob", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="optimal strategy for a scenario")
    s.add_argument("scenario")
    s = sub.add_parser("cost", parents=[common], help="cost of a strategy CSV")
    s.add_argument("scenario")
    s.add_argument("--strategy", required=True)
    s = sub.add_parser("check", parents=[common], help="PD, PMS, TTPM and shape conditions")
    s.add_argument("scenario")
    s = sub.add_parser("pms-search", parents=[common], help="scan round trips for negative cost")
    s.add_argument("scenario")
    s.add_argument("--t-points", type=int, default=200)
    s.add_argument("--refine", action="store_true")
    s = sub.add_parser("oracle", parents=[common], help="brute-force cross-check")
    s.add_argument("scenario", nargs="?")
    s.add_argument("--campaign", type=int, default=0, metavar="K")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s = sub.add_parser("figure1", parents=[common], help="flat-book reference figure")
    s.add_argument("--no-png", action="store_true")
    s = sub.add_parser("figure2", parents=[common], help="power-law reference figure")
    s.add_argument("--gamma", type=float, nargs="+", default=[-0.3, 1.0])
    s.add_argument("--no-png", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](args)
    except LOBError as exc:
        log.debug("command failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(json.dumps(result, indent=2, sort_keys=True, default=_default))
    return 0


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


if __name__ == "__main__":
    sys.exit(main())
