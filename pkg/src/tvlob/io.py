"""Scenario files and strategy CSVs.

A scenario is a JSON object::

    {"params": {"lambda": {...}, "rho": {...}, "T": 1.0},
     "shape": {"kind": "block"},
     "model": "V", "x": -50, "grid": {"regular": 20},
     "mode": "discrete", "s0": 100.0}

Strategy CSVs have the columns ``t, trade_impulse, trade_density,
clause_value``; cells that do not apply are left empty.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cost_engine import MODELS, ContinuousStrategy, DiscreteStrategy
from .errors import InvalidConfig
from .lob_shape import BlockShape, Shape, shape_from_dict
from .market_model import MarketParams, TimeGrid

CSV_COLUMNS = ("t", "trade_impulse", "trade_density", "clause_value")
MODES = ("discrete", "continuous")


@dataclass
class Scenario:
    params: MarketParams
    shape: Shape
    model: str = "V"
    x: float = 0.0
    grid: TimeGrid | None = None
    mode: str = "discrete"
    s0: float | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidConfig(f"model must be 'V' or 'P', got {self.model!r}")
        if self.mode not in MODES:
            raise InvalidConfig(f"mode must be 'discrete' or 'continuous', got {self.mode!r}")
        if self.mode == "discrete" and self.grid is None:
            raise InvalidConfig("discrete mode needs a grid")
        if self.grid is not None and abs(self.grid.horizon - self.params.T) > 1e-12 * self.params.T:
            raise InvalidConfig("grid must end at the horizon T")

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise InvalidConfig("scenario must be a JSON object")
        try:
            params = MarketParams.from_dict(d["params"])
            shape = shape_from_dict(d.get("shape", {"kind": "block"}))
            x = float(d.get("x", 0.0))
        except KeyError as exc:
            raise InvalidConfig(f"scenario missing key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad scenario: {exc}") from exc
        grid = _grid_from_dict(d.get("grid"), params.T)
        s0 = d.get("s0")
        return cls(params, shape, d.get("model", "V"), x, grid, d.get("mode", "discrete"),
                   None if s0 is None else float(s0))

    def to_dict(self) -> dict:
        d = {"params": self.params.to_dict(), "shape": self.shape.to_dict(),
             "model": self.model, "x": self.x, "mode": self.mode}
        if self.grid is not None:
            d["grid"] = {"times": self.grid.times.tolist()}
        if self.s0 is not None:
            d["s0"] = self.s0
        return d

    @property
    def is_block(self) -> bool:
        return isinstance(self.shape, BlockShape)


def _grid_from_dict(g, T):
    if g is None:
        return None
    if not isinstance(g, dict):
        raise InvalidConfig("grid must be {'regular': N} or {'times': [...]}")
    if "regular" in g:
        n = g["regular"]
        if not isinstance(n, int) or n < 1:
            raise InvalidConfig("regular grid needs a positive integer N")
        return TimeGrid.regular(T, n)
    if "times" in g:
        return TimeGrid(np.asarray(g["times"], dtype=float))
    raise InvalidConfig("grid must be {'regular': N} or {'times': [...]}")


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidConfig(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"scenario {path} is not valid JSON: {exc}") from exc
    return Scenario.from_dict(data)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    return "" if v is None else repr(float(v))


def write_rows(path, rows) -> None:
    """Write ``(t, impulse, density, clause)`` tuples; ``None`` leaves a cell empty."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def strategy_rows(strategy, clause=None) -> list[tuple]:
    clause = [None] * len(strategy.times) if clause is None else list(clause)
    if isinstance(strategy, DiscreteStrategy):
        return [(t, x, None, c) for t, x, c in zip(strategy.times, strategy.xi, clause)]
    imps = dict()
    for t, x in strategy.impulses:
        imps[t] = imps.get(t, 0.0) + x
    return [(t, imps.get(float(t), 0.0), d, c)
            for t, d, c in zip(strategy.times, strategy.density, clause)]


def write_strategy_csv(path, strategy, clause=None) -> None:
    write_rows(path, strategy_rows(strategy, clause))


def read_strategy_csv(path, target: float | None = None):
    """Read a strategy CSV back.

    Any non-empty ``trade_density`` cell makes it a continuous strategy.
    ``target`` defaults to minus the total traded volume.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "t" not in reader.fieldnames \
                    or "trade_impulse" not in reader.fieldnames:
                raise InvalidConfig(f"{path}: header must contain t and trade_impulse")
            rows = list(reader)
    except OSError as exc:
        raise InvalidConfig(f"cannot read strategy {path}: {exc}") from exc

    def num(s):
        return 0.0 if s is None or s.strip() == "" else float(s)

    try:
        ts = np.array([float(r["t"]) for r in rows])
        imp = np.array([num(r.get("trade_impulse")) for r in rows])
        dens_cells = [r.get("trade_density") for r in rows]
        continuous = any(c not in (None, "") and c.strip() for c in dens_cells)
        dens = np.array([num(c) for c in dens_cells])
    except ValueError as exc:
        raise InvalidConfig(f"{path}: non-numeric cell: {exc}") from exc
    if continuous:
        impulses = tuple((float(t), float(x)) for t, x in zip(ts, imp) if x != 0.0)
        total = sum(x for _, x in impulses) + float(np.trapezoid(dens, ts))
        tgt = -total if target is None else target
        return ContinuousStrategy(ts, dens, impulses, tgt)
    tgt = -float(imp.sum()) if target is None else target
    return DiscreteStrategy(TimeGrid(ts), imp, tgt)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
