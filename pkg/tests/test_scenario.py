import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import make_scenario
from mtdispatch.model import DEVICE_NAMES, DeviceParams, Scenario, ScenarioError
from mtdispatch.scenario import (
    CSV_HEADER,
    default_scenario_path,
    load_scenario,
    save_scenario,
    table_one_devices,
)

# (alpha, beta, p_min, p_max, eta) of the stock device table
STOCK = {
    "wt": (0.3, 0.1, 0.0, None, 1.0),
    "pv": (0.32, 0.12, 0.0, None, 1.0),
    "rto": (0.165, 0.6, 30.0, 150.0, 3.0),
    "ashp": (0.16, 0.52, 30.0, 100.0, 2.9),
    "wshp": (0.163, 0.5, 30.0, 80.0, 2.95),
    "gshp": (0.165, 0.2, 30.0, 80.0, 3.1),
    "ec": (0.2, 0.0, 0.0, 280.0, 0.65),
    "ac": (0.3, 0.0, 0.0, 260.0, 0.7),
}


def test_stock_device_table():
    devs = table_one_devices()
    assert set(devs) == set(DEVICE_NAMES)
    for name, (alpha, beta, p_min, p_max, eta) in STOCK.items():
        d = devs[name]
        assert (d.alpha, d.beta, d.p_min, d.p_max, d.eta) == (alpha, beta, p_min, p_max, eta), name
    gt = devs["gt"]
    assert (gt.p_max, gt.ramp_up, gt.ramp_down, gt.eta_gt) == (350.0, 50.0, 50.0, 0.58)
    assert devs["grid"].p_max == 800.0
    assert (devs["es"].alpha, devs["es"].charge_max, devs["es"].efficiency) == (0.2, 30.0, 0.98)
    assert (devs["ts"].alpha, devs["ts"].charge_max, devs["ts"].efficiency) == (0.1, 30.0, 0.95)


def test_default_scenario_shape(scenario):
    assert scenario.T == 24 and scenario.n_genes == 432
    assert scenario.h_load.max() == pytest.approx(1100.0)
    assert scenario.q_load.max() == pytest.approx(260.0)
    assert scenario.p_wt_max.max() == pytest.approx(400.0)
    assert scenario.p_pv_max.max() == pytest.approx(500.0, rel=0.01)
    assert np.all(scenario.price_grid > 0) and np.all(scenario.price_gas > 0)


def test_save_load_roundtrip(tmp_path, scenario):
    path = save_scenario(scenario, tmp_path / "copy.yaml")
    back = load_scenario(path)
    for key in ("p_load", "h_load", "q_load", "p_wt_max", "p_pv_max", "price_grid", "price_gas"):
        np.testing.assert_array_equal(getattr(back, key), getattr(scenario, key))
    assert back.devices == scenario.devices
    assert (tmp_path / "copy_series.csv").read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_series_length_mismatch():
    data = {k: np.zeros(2) for k in ("p_load", "q_load", "p_wt_max", "p_pv_max", "price_grid", "price_gas")}
    with pytest.raises(ScenarioError, match="h_load"):
        Scenario(devices=table_one_devices(), h_load=np.zeros(3), **data)


def test_negative_series_rejected():
    with pytest.raises(ScenarioError, match="price_grid"):
        make_scenario(T=2, price_grid=[-0.1, 0.2])


def test_device_invariants():
    with pytest.raises(ScenarioError):
        DeviceParams("x", p_min=10, p_max=5).validate()
    with pytest.raises(ScenarioError):
        DeviceParams("x", eta=0).validate()
    with pytest.raises(ScenarioError):
        DeviceParams("x", ramp_up=-50).validate()
    with pytest.raises(ScenarioError):
        DeviceParams("s", efficiency=0.9, s_min=10, s_max=5, s_init=7).validate()


def test_bad_files(tmp_path, scenario):
    path = save_scenario(scenario, tmp_path / "s.yaml")
    text = path.read_text()
    (tmp_path / "bad.yaml").write_text(text.replace("name: gt", "name: gt, colour: red"))
    with pytest.raises(ScenarioError, match="unknown fields"):
        load_scenario(tmp_path / "bad.yaml")
    csv_path = tmp_path / "s_series.csv"
    csv_path.write_text(csv_path.read_text().replace("p_load", "load", 1))
    with pytest.raises(ScenarioError, match="header"):
        load_scenario(path)


def test_default_scenario_admits_a_feasible_dispatch(scenario):
    """A linear program over the continuous block (storage idle) finds a schedule."""
    s, T = scenario, scenario.T
    d = s.devices
    names = ["grid", "gt", "wt", "pv", "rto", "ashp", "wshp", "gshp", "ec", "ac"]
    col = {n: i for i, n in enumerate(names)}

    def var(n, t):
        return col[n] * T + t

    A_eq, b_eq = [], []
    for t in range(T):
        row = np.zeros(len(names) * T)
        for n in ("grid", "gt", "wt", "pv"):
            row[var(n, t)] = 1.0
        for n in ("rto", "ashp", "wshp", "gshp", "ec"):
            row[var(n, t)] = -1.0
        A_eq.append(row)
        b_eq.append(s.p_load[t])
        row = np.zeros(len(names) * T)
        row[var("gt", t)] = d["gt"].eta_gt
        for n in ("rto", "ashp", "wshp", "gshp"):
            row[var(n, t)] = d[n].eta
        row[var("ac", t)] = -1.0
        A_eq.append(row)
        b_eq.append(s.h_load[t])
        row = np.zeros(len(names) * T)
        row[var("ec", t)] = d["ec"].eta
        row[var("ac", t)] = d["ac"].eta
        A_eq.append(row)
        b_eq.append(s.q_load[t])
    A_ub, b_ub = [], []
    for t in range(1, T):
        row = np.zeros(len(names) * T)
        row[var("gt", t)], row[var("gt", t - 1)] = 1.0, -1.0
        A_ub += [row, -row]
        b_ub += [d["gt"].ramp_up, d["gt"].ramp_down]
    box = []
    for n in names:
        for t in range(T):
            if n == "wt":
                box.append((0, s.p_wt_max[t]))
            elif n == "pv":
                box.append((0, s.p_pv_max[t]))
            else:
                box.append((d[n].p_min, d[n].p_max))
    res = linprog(np.zeros(len(names) * T), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=box)
    assert res.status == 0


def test_default_path_is_packaged():
    assert default_scenario_path().exists()
