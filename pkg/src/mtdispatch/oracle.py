"""Brute-force ground truth on tiny dispatch instances.

Nothing here calls into :mod:`mtdispatch.model`'s evaluation or repair code:
the gene layout, the box, the balances, the ramp and SoC checks and both
objectives are written out again from the equations so that a bug in one
implementation shows up as a disagreement with the other.  Only the
:class:`~mtdispatch.model.Scenario` data container is shared.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .model import DeviceParams, Scenario

GRID_LIMIT = 10**8
CHUNK = 1 << 18

LAYOUT = (
    "p_grid", "p_gt", "p_wt", "p_pv", "p_rto", "p_ashp", "p_wshp", "p_gshp",
    "p_ec", "p_ac", "p_es_in", "p_es_out", "h_ts_in", "h_ts_out",
    "x_es_in", "x_es_out", "x_ts_in", "x_ts_out",
)


class GridTooLarge(ValueError):
    pass


@dataclass
class MicroScenario:
    """A scenario small enough to enumerate on a regular grid.

    ``steps`` maps continuous variable names to the grid spacing (kW); the
    default spacing applies to every other active variable.
    """

    scenario: Scenario
    step: float = 10.0
    steps: dict[str, float] = field(default_factory=dict)
    tau_eq: float = 1e-3
    name: str = "micro"


def _box(s: Scenario, name: str, t: int) -> tuple[float, float]:
    d = s.devices
    if name.startswith("x_"):
        store = d["es"] if "_es_" in name else d["ts"]
        limit = store.charge_max if name.endswith("_in") else store.discharge_max
        return 0.0, (1.0 if (limit or 0.0) > 0 else 0.0)
    if name == "p_wt":
        return 0.0, float(s.p_wt_max[t]) if d["wt"].p_max is None else min(float(s.p_wt_max[t]), d["wt"].p_max)
    if name == "p_pv":
        return 0.0, float(s.p_pv_max[t]) if d["pv"].p_max is None else min(float(s.p_pv_max[t]), d["pv"].p_max)
    if name in ("p_es_in", "p_es_out", "h_ts_in", "h_ts_out"):
        store = d["es"] if "_es_" in name else d["ts"]
        limit = store.charge_max if name.endswith("_in") else store.discharge_max
        return 0.0, float(limit or 0.0)
    dev = d[name[2:]]
    return float(dev.p_min), float(dev.p_max)


def levels(ms: MicroScenario) -> list[np.ndarray]:
    """Grid values for every gene in layout order."""
    s = ms.scenario
    out = []
    for name in LAYOUT:
        for t in range(s.T):
            lo, hi = _box(s, name, t)
            if name.startswith("x_"):
                out.append(np.arange(lo, hi + 1.0))
            elif hi <= lo:
                out.append(np.array([lo]))
            else:
                step = ms.steps.get(name, ms.step)
                out.append(np.arange(lo, hi + step / 2, step))
    return out


def grid_size(ms: MicroScenario) -> int:
    return int(np.prod([len(v) for v in levels(ms)], dtype=object))


def residuals(s: Scenario, X: np.ndarray) -> dict[str, np.ndarray]:
    """Constraint residuals written straight from the model equations."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = s.T
    d = s.devices
    g = {name: X[:, k * T:(k + 1) * T] for k, name in enumerate(LAYOUT)}
    es_in = g["x_es_in"] * g["p_es_in"]
    es_out = g["x_es_out"] * g["p_es_out"]
    ts_in = g["x_ts_in"] * g["h_ts_in"]
    ts_out = g["x_ts_out"] * g["h_ts_out"]

    supply = g["p_grid"] + g["p_gt"] + g["p_wt"] + g["p_pv"] + es_out
    demand = s.p_load + g["p_rto"] + g["p_ashp"] + g["p_wshp"] + g["p_gshp"] + es_in + g["p_ec"]
    heat_in = (d["gt"].eta_gt * g["p_gt"] + d["rto"].eta * g["p_rto"] + d["ashp"].eta * g["p_ashp"]
               + d["wshp"].eta * g["p_wshp"] + d["gshp"].eta * g["p_gshp"] + ts_out)
    heat_out = s.h_load + g["p_ac"] + ts_in
    cool = d["ec"].eta * g["p_ec"] + d["ac"].eta * g["p_ac"]

    res = {
        "elec": np.abs(supply - demand),
        "heat": np.abs(heat_in - heat_out),
        "cool": np.abs(cool - s.q_load),
    }
    ramp = np.zeros_like(g["p_gt"])
    for t in range(1, T):
        up = g["p_gt"][:, t] - g["p_gt"][:, t - 1] - d["gt"].ramp_up
        down = g["p_gt"][:, t - 1] - g["p_gt"][:, t] - d["gt"].ramp_down
        ramp[:, t] = np.maximum(np.maximum(up, down), 0.0)
    res["ramp"] = ramp

    for key, charge, discharge, store in (("es", es_in, es_out, d["es"]), ("ts", ts_in, ts_out, d["ts"])):
        level = np.full(len(X), store.s_init, dtype=float)
        excess = np.zeros_like(charge)
        for t in range(T):
            level = level + store.efficiency * charge[:, t] - discharge[:, t] / store.efficiency
            excess[:, t] = np.maximum(store.s_min - level, 0.0) + np.maximum(level - store.s_max, 0.0)
        res[f"soc_{key}"] = excess
        res[f"excl_{key}"] = np.maximum(g[f"x_{key}_in"] + g[f"x_{key}_out"] - 1.0, 0.0)
    return res


def is_feasible(s: Scenario, X: np.ndarray, tau_eq: float = 1e-3, tau_ineq: float = 1e-9) -> np.ndarray:
    """Feasibility verdict per row: balances within ``tau_eq``, every other residual within ``tau_ineq``."""
    res = residuals(s, X)
    ok = np.ones(len(np.atleast_2d(X)), dtype=bool)
    for key, r in res.items():
        tol = tau_eq if key in ("elec", "heat", "cool") else tau_ineq
        ok &= np.all(r < tol if tol == tau_eq else r <= tol, axis=1)
    return ok


def objectives(s: Scenario, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = s.T
    d = s.devices
    g = {name: X[:, k * T:(k + 1) * T] for k, name in enumerate(LAYOUT)}
    f1 = np.zeros(len(X))
    f2 = np.zeros(len(X))
    for t in range(T):
        f1 += s.price_grid[t] * g["p_grid"][:, t] + s.price_gas[t] * g["p_gt"][:, t]
        f1 += d["wt"].alpha * g["p_wt"][:, t] + d["pv"].alpha * g["p_pv"][:, t]
        f1 += d["ec"].alpha * d["ec"].eta * g["p_ec"][:, t] + d["ac"].alpha * d["ac"].eta * g["p_ac"][:, t]
        f1 += d["es"].alpha * (g["x_es_out"][:, t] * g["p_es_out"][:, t] + g["x_es_in"][:, t] * g["p_es_in"][:, t])
        f1 += d["ts"].alpha * (g["x_ts_out"][:, t] * g["h_ts_out"][:, t] + g["x_ts_in"][:, t] * g["h_ts_in"][:, t])
        f2 += d["wt"].beta * (s.p_wt_max[t] - g["p_wt"][:, t]) + d["pv"].beta * (s.p_pv_max[t] - g["p_pv"][:, t])
        for dev in ("rto", "ashp", "wshp", "gshp"):
            p = d[dev]
            f1 += p.alpha * p.eta * g[f"p_{dev}"][:, t]
            f2 += p.beta * (p.eta * p.p_max - p.eta * g[f"p_{dev}"][:, t])
    return np.column_stack([f1, f2])


def enumerate_feasible(ms: MicroScenario, limit: int = GRID_LIMIT) -> np.ndarray:
    """Every grid point that satisfies all constraints, one row per point."""
    lv = levels(ms)
    total = grid_size(ms)
    if total > limit:
        raise GridTooLarge(f"{ms.name}: grid has {total} points, limit is {limit}")
    sizes = np.array([len(v) for v in lv], dtype=np.int64)
    active = np.flatnonzero(sizes > 1)
    base = np.array([v[0] for v in lv], dtype=float)
    strides = np.ones(len(active), dtype=np.int64)
    for j in range(len(active) - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[active[j + 1]]
    found = []
    for lo in range(0, total, CHUNK):
        flat = np.arange(lo, min(lo + CHUNK, total), dtype=np.int64)
        X = np.tile(base, (len(flat), 1))
        for j, gene in enumerate(active):
            X[:, gene] = lv[gene][(flat // strides[j]) % sizes[gene]]
        keep = is_feasible(ms.scenario, X, ms.tau_eq)
        if keep.any():
            found.append(X[keep])
    return np.vstack(found) if found else np.empty((0, len(lv)))


def _pareto_filter(F: np.ndarray) -> np.ndarray:
    """Indices of non-dominated rows of a two-column array, one per distinct vector."""
    order = np.lexsort((F[:, 1], F[:, 0]))
    keep = []
    best_f2 = np.inf
    last = None
    for i in order:
        if F[i, 1] < best_f2:
            keep.append(i)
            best_f2 = F[i, 1]
            last = F[i]
        elif last is not None and np.array_equal(F[i], last):
            continue
    return np.array(keep, dtype=int)


def pareto_oracle(ms: MicroScenario, limit: int = GRID_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """Exact non-dominated set over the grid: ``(genes, objectives)``."""
    X = enumerate_feasible(ms, limit)
    if len(X) == 0:
        raise ValueError(f"{ms.name}: no feasible grid point")
    F = objectives(ms.scenario, X)
    keep = _pareto_filter(F)
    return X[keep], F[keep]


def grid_step_tolerance(ms: MicroScenario) -> float:
    """Smallest objective-space distance covered by one grid step of a single gene.

    Both objectives are linear, so the move is measured once from the lower
    corner of the box.  Binary genes and steps that leave both objectives
    unchanged are ignored.
    """
    lv = levels(ms)
    base = np.array([v[0] for v in lv], dtype=float)
    f0 = objectives(ms.scenario, base)[0]
    T = ms.scenario.T
    best = np.inf
    for gene, values in enumerate(lv):
        if len(values) < 2 or LAYOUT[gene // T].startswith("x_"):
            continue
        moved = base.copy()
        moved[gene] = values[1]
        d = float(np.linalg.norm(objectives(ms.scenario, moved)[0] - f0))
        if d > 0:
            best = min(best, d)
    return best


# --------------------------------------------------------------------------- fixtures

def _micro_devices(active: set[str], **overrides: dict) -> dict[str, DeviceParams]:
    from .scenario import table_one_devices

    devs = table_one_devices()
    for name, dev in devs.items():
        if name in active:
            continue
        if name in ("es", "ts"):
            dev.charge_max = dev.discharge_max = 0.0
        elif name not in ("wt", "pv"):
            dev.p_min = dev.p_max = 0.0
    for name, fields_ in overrides.items():
        for key, value in fields_.items():
            setattr(devs[name], key, value)
    return devs


def _series(T, **values):
    base = {k: np.zeros(T) for k in ("p_load", "h_load", "q_load", "p_wt_max", "p_pv_max", "price_grid", "price_gas")}
    base.update({k: np.asarray(v, dtype=float) for k, v in values.items()})
    return base


def micro_scenarios() -> dict[str, MicroScenario]:
    """Three fixed instances with on-grid loads.

    * ``electric``: one hour, grid/wind/PV against an electric load.
    * ``heat-ramp``: two hours, grid/gas turbine/air-source heat pump/wind
      with a heat load and the turbine ramp limit binding.  Turbine and heat
      pump steps both add 29 kW of heat, so every vertex of the continuous
      feasible region is a grid point.
    * ``storage``: two hours, grid/PV/electric storage with both modes.
    """
    electric = Scenario(
        devices=_micro_devices({"grid", "wt", "pv"}, grid={"p_max": 300.0}),
        name="electric",
        **_series(1, p_load=[300.0], p_wt_max=[200.0], p_pv_max=[150.0], price_grid=[0.15], price_gas=[0.4]),
    )
    heat = Scenario(
        devices=_micro_devices({"grid", "gt", "ashp", "wt"}, grid={"p_max": 200.0}, gt={"p_max": 100.0},
                               ashp={"p_min": 0.0, "p_max": 40.0}),
        name="heat-ramp",
        **_series(2, p_load=[150.0, 180.0], h_load=[116.0, 145.0], p_wt_max=[40.0, 30.0],
                  price_grid=[0.2, 0.5], price_gas=[0.4, 0.4]),
    )
    storage = Scenario(
        devices=_micro_devices({"grid", "pv", "es"}, grid={"p_max": 120.0},
                               es={"charge_max": 20.0, "discharge_max": 20.0, "s_min": 5.0, "s_max": 30.0,
                                   "s_init": 10.0}),
        name="storage",
        **_series(2, p_load=[60.0, 80.0], p_pv_max=[0.0, 60.0], price_grid=[0.1, 0.25], price_gas=[0.4, 0.4]),
    )
    return {
        "electric": MicroScenario(electric, step=10.0, name="electric"),
        "heat-ramp": MicroScenario(heat, step=10.0, steps={"p_gt": 50.0}, name="heat-ramp"),
        "storage": MicroScenario(storage, step=10.0, name="storage"),
    }


def grid_points(ms: MicroScenario):
    """Iterate over every grid point (slow; for tests on very small grids)."""
    for combo in itertools.product(*levels(ms)):
        yield np.array(combo)
