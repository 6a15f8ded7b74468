"""Day-ahead dispatch model of a coal-mine integrated energy system.

A candidate schedule is a flat vector of ``len(VARIABLES) * T`` genes laid
out variable-major: gene ``k * T + t`` holds variable ``VARIABLES[k]`` at
hour ``t``.  Every function here accepts a single vector of shape ``(D,)``
or a batch of shape ``(N, D)`` and keeps the leading dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

VARIABLES = (
    "p_grid", "p_gt", "p_wt", "p_pv", "p_rto", "p_ashp", "p_wshp", "p_gshp",
    "p_ec", "p_ac", "p_es_in", "p_es_out", "h_ts_in", "h_ts_out",
    "x_es_in", "x_es_out", "x_ts_in", "x_ts_out",
)
CONTINUOUS = VARIABLES[:14]
BINARIES = VARIABLES[14:]
VAR_INDEX = {name: k for k, name in enumerate(VARIABLES)}

HEAT_DEVICES = ("rto", "ashp", "wshp", "gshp")
RENEWABLES = ("wt", "pv")
DEVICE_NAMES = ("grid", "gt", "wt", "pv", "rto", "ashp", "wshp", "gshp", "ec", "ac", "es", "ts")

FAMILIES = (
    "elec_balance", "heat_balance", "cool_balance",
    "ramp_up", "ramp_down",
    "soc_es", "soc_ts",
    "excl_es", "excl_ts",
)
TERMINAL_FAMILIES = ("terminal_es", "terminal_ts")
BALANCE_FAMILIES = FAMILIES[:3]

TAU_EQ = 1e-3
# float noise floor for inequality families (SoC recursion, ramps)
TAU_INEQ = 1e-9


class ScenarioError(ValueError):
    """Raised for structurally invalid scenarios or mis-sized decision vectors."""


@dataclass
class DeviceParams:
    """Technical and economic parameters of one device.

    Only the fields that make sense for a device kind are read: ``beta`` for
    renewables and heat sources, ramps and ``eta_gt`` for the gas turbine,
    the storage block for ``es`` and ``ts``.  ``p_max=None`` on a renewable
    means the hourly forecast is the cap.
    """

    name: str
    alpha: float = 0.0
    beta: float = 0.0
    p_min: float = 0.0
    p_max: float | None = None
    eta: float = 1.0
    ramp_up: float | None = None
    ramp_down: float | None = None
    eta_gt: float | None = None
    charge_max: float | None = None
    discharge_max: float | None = None
    efficiency: float | None = None
    s_min: float | None = None
    s_max: float | None = None
    s_init: float | None = None

    def validate(self) -> None:
        p_max = np.inf if self.p_max is None else self.p_max
        if not 0.0 <= self.p_min <= p_max:
            raise ScenarioError(f"{self.name}: need 0 <= p_min <= p_max, got {self.p_min}, {self.p_max}")
        if self.eta <= 0:
            raise ScenarioError(f"{self.name}: eta must be positive")
        for attr in ("ramp_up", "ramp_down"):
            value = getattr(self, attr)
            if value is not None and value < 0:
                raise ScenarioError(f"{self.name}: {attr} is a magnitude and must be >= 0")
        if self.efficiency is not None:
            if not 0.0 < self.efficiency <= 1.0:
                raise ScenarioError(f"{self.name}: storage efficiency must lie in (0, 1]")
            if self.s_min is None or self.s_max is None or self.s_init is None:
                raise ScenarioError(f"{self.name}: storage needs s_min, s_max and s_init")
            if not self.s_min <= self.s_init <= self.s_max:
                raise ScenarioError(f"{self.name}: need s_min <= s_init <= s_max")
            if (self.charge_max or 0.0) < 0 or (self.discharge_max or 0.0) < 0:
                raise ScenarioError(f"{self.name}: storage power limits must be >= 0")


SERIES = ("p_load", "h_load", "q_load", "p_wt_max", "p_pv_max", "price_grid", "price_gas")


@dataclass
class Scenario:
    """Exogenous data for one dispatch day."""

    p_load: np.ndarray
    h_load: np.ndarray
    q_load: np.ndarray
    p_wt_max: np.ndarray
    p_pv_max: np.ndarray
    price_grid: np.ndarray
    price_gas: np.ndarray
    devices: dict[str, DeviceParams] = field(default_factory=dict)
    name: str = "scenario"

    def __post_init__(self):
        for key in SERIES:
            setattr(self, key, np.asarray(getattr(self, key), dtype=float).reshape(-1))
        self.validate()

    @property
    def T(self) -> int:
        return self.p_load.shape[0]

    @property
    def n_genes(self) -> int:
        return len(VARIABLES) * self.T

    def validate(self) -> None:
        T = self.T
        for key in SERIES:
            series = getattr(self, key)
            if series.shape != (T,):
                raise ScenarioError(f"series {key} has length {series.shape[0]}, expected {T}")
            if not np.all(np.isfinite(series)) or np.any(series < 0):
                raise ScenarioError(f"series {key} must be finite and nonnegative")
        missing = [n for n in DEVICE_NAMES if n not in self.devices]
        if missing:
            raise ScenarioError(f"missing devices: {', '.join(missing)}")
        for name, dev in self.devices.items():
            if dev.name != name:
                raise ScenarioError(f"device record {dev.name!r} stored under {name!r}")
            dev.validate()
        gt = self.devices["gt"]
        if gt.ramp_up is None or gt.ramp_down is None or gt.eta_gt is None:
            raise ScenarioError("gt needs ramp_up, ramp_down and eta_gt")
        for name in ("es", "ts"):
            if self.devices[name].efficiency is None:
                raise ScenarioError(f"{name} needs the storage block (efficiency, s_min, s_max, s_init)")


# --------------------------------------------------------------------------- encoding

def split(x: np.ndarray, T: int) -> dict[str, np.ndarray]:
    """Views of ``x`` keyed by variable name, each shaped ``(..., T)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(VARIABLES) * T:
        raise ScenarioError(f"decision vector has {x.shape[-1]} genes, expected {len(VARIABLES) * T}")
    blocks = x.reshape(x.shape[:-1] + (len(VARIABLES), T))
    return {name: blocks[..., k, :] for k, name in enumerate(VARIABLES)}


def join(schedule: Mapping[str, np.ndarray], T: int) -> np.ndarray:
    """Inverse of :func:`split`; missing variables are zero."""
    lead = np.broadcast_shapes(*(np.shape(v)[:-1] for v in schedule.values())) if schedule else ()
    x = np.zeros(lead + (len(VARIABLES), T))
    for name, values in schedule.items():
        x[..., VAR_INDEX[name], :] = values
    return x.reshape(lead + (len(VARIABLES) * T,))


def bounds(s: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Per-gene box ``(lower, upper)``; binaries live in ``[0, 1]``."""
    d = s.devices
    T = s.T
    lo = {name: np.zeros(T) for name in VARIABLES}
    hi = {name: np.ones(T) for name in VARIABLES}
    hi["p_grid"] = np.full(T, d["grid"].p_max)
    hi["p_gt"] = np.full(T, d["gt"].p_max)
    hi["p_wt"] = s.p_wt_max if d["wt"].p_max is None else np.minimum(s.p_wt_max, d["wt"].p_max)
    hi["p_pv"] = s.p_pv_max if d["pv"].p_max is None else np.minimum(s.p_pv_max, d["pv"].p_max)
    for dev in HEAT_DEVICES + ("ec", "ac"):
        lo[f"p_{dev}"] = np.full(T, d[dev].p_min)
        hi[f"p_{dev}"] = np.full(T, d[dev].p_max)
    lo["p_grid"] = np.full(T, d["grid"].p_min)
    lo["p_gt"] = np.full(T, d["gt"].p_min)
    hi["p_es_in"] = np.full(T, d["es"].charge_max or 0.0)
    hi["p_es_out"] = np.full(T, d["es"].discharge_max or 0.0)
    hi["h_ts_in"] = np.full(T, d["ts"].charge_max or 0.0)
    hi["h_ts_out"] = np.full(T, d["ts"].discharge_max or 0.0)
    lower = np.concatenate([lo[n] for n in VARIABLES])
    upper = np.concatenate([np.asarray(hi[n], dtype=float) for n in VARIABLES])
    return lower, upper


def heat_caps(s: Scenario) -> dict[str, float]:
    """Heat-side output caps ``eta * p_max`` of the mine heat sources."""
    return {dev: s.devices[dev].eta * s.devices[dev].p_max for dev in HEAT_DEVICES}


# --------------------------------------------------------------------------- evaluation

def _state_of_charge(charge, discharge, dev: DeviceParams):
    """SoC after each step: S_t = S_{t-1} + eta*charge_t - discharge_t/eta."""
    eta = dev.efficiency
    delta = eta * charge - discharge / eta
    return dev.s_init + np.cumsum(delta, axis=-1)


def storage_levels(x: np.ndarray, s: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Electric and thermal storage state of charge, each ``(..., T)``."""
    v = split(x, s.T)
    es = _state_of_charge(v["x_es_in"] * v["p_es_in"], v["x_es_out"] * v["p_es_out"], s.devices["es"])
    ts = _state_of_charge(v["x_ts_in"] * v["h_ts_in"], v["x_ts_out"] * v["h_ts_out"], s.devices["ts"])
    return es, ts


def evaluate_objectives(x: np.ndarray, s: Scenario) -> np.ndarray:
    """Operating cost ``f1`` and abandoned-energy cost ``f2``, shape ``(..., 2)``."""
    d = s.devices
    v = split(x, s.T)
    c_buy = s.price_grid * v["p_grid"] + s.price_gas * v["p_gt"]
    c_opma = (
        d["wt"].alpha * v["p_wt"]
        + d["pv"].alpha * v["p_pv"]
        + d["ec"].alpha * d["ec"].eta * v["p_ec"]
        + d["ac"].alpha * d["ac"].eta * v["p_ac"]
        + d["es"].alpha * (v["x_es_out"] * v["p_es_out"] + v["x_es_in"] * v["p_es_in"])
        + d["ts"].alpha * (v["x_ts_out"] * v["h_ts_out"] + v["x_ts_in"] * v["h_ts_in"])
    )
    abandoned = (
        d["wt"].beta * (s.p_wt_max - v["p_wt"])
        + d["pv"].beta * (s.p_pv_max - v["p_pv"])
    )
    for dev in HEAT_DEVICES:
        p = d[dev]
        heat = p.eta * v[f"p_{dev}"]
        c_opma = c_opma + p.alpha * heat
        abandoned = abandoned + p.beta * (p.eta * p.p_max - heat)
    f1 = np.sum(c_buy + c_opma, axis=-1)
    f2 = np.sum(abandoned, axis=-1)
    return np.stack([f1, f2], axis=-1)


def balance_residuals(x: np.ndarray, s: Scenario) -> dict[str, np.ndarray]:
    """Signed supply-minus-demand residuals of the three energy balances."""
    d = s.devices
    v = split(x, s.T)
    elec = (
        v["p_grid"] + v["p_gt"] + v["p_wt"] + v["p_pv"] + v["x_es_out"] * v["p_es_out"]
        - s.p_load - v["p_rto"] - v["p_ashp"] - v["p_wshp"] - v["p_gshp"]
        - v["x_es_in"] * v["p_es_in"] - v["p_ec"]
    )
    heat = d["gt"].eta_gt * v["p_gt"] + v["x_ts_out"] * v["h_ts_out"]
    for dev in HEAT_DEVICES:
        heat = heat + d[dev].eta * v[f"p_{dev}"]
    heat = heat - s.h_load - v["p_ac"] - v["x_ts_in"] * v["h_ts_in"]
    cool = d["ec"].eta * v["p_ec"] + d["ac"].eta * v["p_ac"] - s.q_load
    return {"elec_balance": elec, "heat_balance": heat, "cool_balance": cool}


def evaluate_constraints(
    x: np.ndarray, s: Scenario, tau_eq: float = TAU_EQ, terminal_soc: bool = False
) -> dict[str, np.ndarray]:
    """Nonnegative violation per constraint family and hour, each ``(..., T)``.

    Ramp families are zero at ``t = 0`` (no previous setpoint).  Terminal
    families, when enabled, carry the end-of-day SoC deviation in the last
    slot and zeros elsewhere.
    """
    d = s.devices
    v = split(x, s.T)
    out = {}
    for key, r in balance_residuals(x, s).items():
        r = np.abs(r)
        out[key] = np.where(r < tau_eq, 0.0, r)

    gt = v["p_gt"]
    step = np.diff(gt, axis=-1)
    pad = np.zeros(gt.shape[:-1] + (1,))
    out["ramp_up"] = np.concatenate([pad, np.maximum(0.0, step - d["gt"].ramp_up)], axis=-1)
    out["ramp_down"] = np.concatenate([pad, np.maximum(0.0, -step - d["gt"].ramp_down)], axis=-1)

    soc_es, soc_ts = storage_levels(x, s)
    for key, soc, dev in (("soc_es", soc_es, d["es"]), ("soc_ts", soc_ts, d["ts"])):
        out[key] = np.maximum(0.0, dev.s_min - soc) + np.maximum(0.0, soc - dev.s_max)

    out["excl_es"] = np.maximum(0.0, v["x_es_in"] + v["x_es_out"] - 1.0)
    out["excl_ts"] = np.maximum(0.0, v["x_ts_in"] + v["x_ts_out"] - 1.0)

    if terminal_soc:
        for key, soc, dev in (("terminal_es", soc_es, d["es"]), ("terminal_ts", soc_ts, d["ts"])):
            gap = np.zeros_like(soc)
            gap[..., -1] = np.abs(soc[..., -1] - dev.s_init)
            out[key] = np.where(gap < tau_eq, 0.0, gap)

    for key in out:
        if key not in BALANCE_FAMILIES and not key.startswith("terminal"):
            out[key] = np.where(out[key] < TAU_INEQ, 0.0, out[key])
    return out


def constraint_scales(s: Scenario) -> dict[str, float]:
    """Per-family normalizers used by :func:`aggregate_cv` (floored at 1)."""
    d = s.devices

    def floor(value):
        return max(float(value), 1.0)

    return {
        "elec_balance": floor(s.p_load.max()),
        "heat_balance": floor(s.h_load.max()),
        "cool_balance": floor(s.q_load.max()),
        "ramp_up": floor(d["gt"].ramp_up),
        "ramp_down": floor(d["gt"].ramp_down),
        "soc_es": floor(d["es"].s_max),
        "soc_ts": floor(d["ts"].s_max),
        "excl_es": 1.0,
        "excl_ts": 1.0,
        "terminal_es": floor(d["es"].s_max),
        "terminal_ts": floor(d["ts"].s_max),
    }


def aggregate_cv(violations: Mapping[str, np.ndarray], s: Scenario) -> np.ndarray:
    """Normalized violation sum; zero exactly when every entry is zero."""
    scales = constraint_scales(s)
    total = 0.0
    for key, values in violations.items():
        total = total + np.sum(values, axis=-1) / scales[key]
    return np.asarray(total, dtype=float)


def violation_vector(violations: Mapping[str, np.ndarray]) -> np.ndarray:
    """Flatten the family dict into one ``(..., n_families * T)`` array."""
    keys = [k for k in FAMILIES + TERMINAL_FAMILIES if k in violations]
    return np.concatenate([violations[k] for k in keys], axis=-1)


@dataclass
class Evaluation:
    f: np.ndarray
    violations: dict[str, np.ndarray]
    cv: float

    @property
    def feasible(self) -> bool:
        return self.cv == 0.0


def evaluate(x: np.ndarray, s: Scenario, tau_eq: float = TAU_EQ, terminal_soc: bool = False) -> Evaluation:
    """Full evaluation of a single decision vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ScenarioError("evaluate() takes one decision vector; use DispatchProblem for batches")
    viol = evaluate_constraints(x, s, tau_eq, terminal_soc)
    return Evaluation(evaluate_objectives(x, s), viol, float(aggregate_cv(viol, s)))


# --------------------------------------------------------------------------- repair

def repair_bounds(x: np.ndarray, s: Scenario) -> np.ndarray:
    """Clamp to the device box and resolve storage modes.

    Binary genes are rounded; if both modes of a storage end up on, the one
    with the smaller associated power is switched off (ties keep charging).
    """
    x = np.array(x, dtype=float, copy=True)
    lower, upper = bounds(s)
    np.clip(x, lower, upper, out=x)
    v = split(x, s.T)
    for mode in BINARIES:
        v[mode][...] = np.where(v[mode] >= 0.5, 1.0, 0.0)
    for x_in, x_out, p_in, p_out in (
        ("x_es_in", "x_es_out", "p_es_in", "p_es_out"),
        ("x_ts_in", "x_ts_out", "h_ts_in", "h_ts_out"),
    ):
        both = (v[x_in] == 1.0) & (v[x_out] == 1.0)
        keep_in = v[p_in] >= v[p_out]
        v[x_out][...] = np.where(both & keep_in, 0.0, v[x_out])
        v[x_in][...] = np.where(both & ~keep_in, 0.0, v[x_in])
    return x


def _shift(values, lo, hi, amount):
    """Move ``sum(values)`` by ``amount`` in proportion to each gene's headroom.

    ``values``, ``lo``, ``hi`` are ``(..., k)``; ``amount`` is ``(...)``.
    Returns the moved values and the part of ``amount`` that did not fit.
    """
    up = np.maximum(hi - values, 0.0)
    down = np.maximum(values - lo, 0.0)
    room = np.where(amount[..., None] >= 0, up, down)
    total = room.sum(axis=-1)
    take = np.minimum(np.abs(amount), total)
    frac = np.divide(take, total, out=np.zeros_like(take), where=total > 0)
    moved = values + np.sign(amount)[..., None] * room * frac[..., None]
    return moved, amount - np.sign(amount) * take


def repair_balance(x: np.ndarray, s: Scenario) -> np.ndarray:
    """Domain repair that pulls an in-box vector towards the balance manifolds.

    Applied after :func:`repair_bounds`.  In order: storage powers are
    trimmed so the SoC recursion stays inside its band, the gas turbine is
    walked forward through its ramp window, then the cooling, thermal and
    electrical balances are closed using, respectively, the electric
    chiller, the four mine heat sources and the grid (spilling into
    renewable curtailment when the grid saturates).  Whatever cannot be
    absorbed inside the box is left as a residual for the constraint
    evaluator to report.
    """
    x = np.array(x, dtype=float, copy=True)
    d = s.devices
    T = s.T
    v = split(x, T)
    lower, upper = bounds(s)
    lo = split(lower, T)
    hi = split(upper, T)

    for x_in, x_out, p_in, p_out, dev in (
        ("x_es_in", "x_es_out", "p_es_in", "p_es_out", d["es"]),
        ("x_ts_in", "x_ts_out", "h_ts_in", "h_ts_out", d["ts"]),
    ):
        eta = dev.efficiency
        soc = np.full(x.shape[:-1], dev.s_init, dtype=float)
        for t in range(T):
            charge = v[x_in][..., t] * v[p_in][..., t]
            charge = np.minimum(charge, np.maximum(dev.s_max - soc, 0.0) / eta)
            discharge = v[x_out][..., t] * v[p_out][..., t]
            discharge = np.minimum(discharge, np.maximum(soc - dev.s_min, 0.0) * eta)
            v[p_in][..., t] = np.where(v[x_in][..., t] == 1.0, charge, v[p_in][..., t])
            v[p_out][..., t] = np.where(v[x_out][..., t] == 1.0, discharge, v[p_out][..., t])
            soc = soc + eta * charge - discharge / eta

    gt = v["p_gt"]
    for t in range(1, T):
        gt[..., t] = np.clip(gt[..., t], gt[..., t - 1] - d["gt"].ramp_down, gt[..., t - 1] + d["gt"].ramp_up)
    np.clip(gt, lo["p_gt"], hi["p_gt"], out=gt)

    eta_ec, eta_ac = d["ec"].eta, d["ac"].eta
    ec = (s.q_load - eta_ac * v["p_ac"]) / eta_ec
    v["p_ec"][...] = np.clip(ec, lo["p_ec"], hi["p_ec"])
    ac = (s.q_load - eta_ec * v["p_ec"]) / eta_ac
    v["p_ac"][...] = np.clip(ac, lo["p_ac"], hi["p_ac"])

    etas = np.array([d[dev].eta for dev in HEAT_DEVICES])
    heat = np.stack([v[f"p_{dev}"] for dev in HEAT_DEVICES], axis=-1) * etas
    heat_lo = np.stack([lo[f"p_{dev}"] for dev in HEAT_DEVICES], axis=-1) * etas
    heat_hi = np.stack([hi[f"p_{dev}"] for dev in HEAT_DEVICES], axis=-1) * etas
    need = (
        s.h_load + v["p_ac"] + v["x_ts_in"] * v["h_ts_in"]
        - v["x_ts_out"] * v["h_ts_out"] - d["gt"].eta_gt * v["p_gt"]
    )
    heat, _ = _shift(heat, heat_lo, heat_hi, need - heat.sum(axis=-1))
    for k, dev in enumerate(HEAT_DEVICES):
        v[f"p_{dev}"][...] = heat[..., k] / etas[k]

    demand = (
        s.p_load + v["p_rto"] + v["p_ashp"] + v["p_wshp"] + v["p_gshp"] + v["p_ec"]
        + v["x_es_in"] * v["p_es_in"]
    )
    supply = v["p_gt"] + v["p_wt"] + v["p_pv"] + v["x_es_out"] * v["p_es_out"]
    grid = demand - supply
    clipped = np.clip(grid, lo["p_grid"], hi["p_grid"])
    v["p_grid"][...] = clipped
    ren = np.stack([v["p_wt"], v["p_pv"]], axis=-1)
    ren_lo = np.stack([lo["p_wt"], lo["p_pv"]], axis=-1)
    ren_hi = np.stack([np.broadcast_to(hi["p_wt"], v["p_wt"].shape), np.broadcast_to(hi["p_pv"], v["p_pv"].shape)], axis=-1)
    ren, _ = _shift(ren, ren_lo, ren_hi, grid - clipped)
    v["p_wt"][...] = ren[..., 0]
    v["p_pv"][...] = ren[..., 1]
    # heat/power round trips can land a few ulps outside the box
    np.clip(x, lower, upper, out=x)
    return x


class DispatchProblem:
    """Scenario plus evaluation settings, exposed as a batch black box.

    ``evaluate(X)`` returns objectives ``(N, 2)`` and aggregated violation
    ``(N,)``; ``repair(X)`` applies the bound repair and, unless disabled,
    the balance repair.
    """

    def __init__(self, scenario: Scenario, tau_eq: float = TAU_EQ, terminal_soc: bool = False,
                 balance_repair: bool = True):
        self.scenario = scenario
        self.tau_eq = tau_eq
        self.terminal_soc = terminal_soc
        self.balance_repair = balance_repair
        self.lower, self.upper = bounds(scenario)

    @property
    def n_genes(self) -> int:
        return self.scenario.n_genes

    def repair(self, X: np.ndarray) -> np.ndarray:
        X = repair_bounds(X, self.scenario)
        if self.balance_repair:
            X = repair_balance(X, self.scenario)
        return X

    def violations(self, X: np.ndarray) -> dict[str, np.ndarray]:
        return evaluate_constraints(X, self.scenario, self.tau_eq, self.terminal_soc)

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(X)
        F = evaluate_objectives(X, self.scenario)
        cv = aggregate_cv(self.violations(X), self.scenario)
        return F, cv

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform draws in the box, repaired."""
        X = self.lower + rng.random((n, self.n_genes)) * (self.upper - self.lower)
        return self.repair(X)
