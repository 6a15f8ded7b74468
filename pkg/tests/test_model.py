import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_scenario
from mtdispatch.model import (
    BINARIES,
    FAMILIES,
    HEAT_DEVICES,
    VARIABLES,
    DispatchProblem,
    ScenarioError,
    aggregate_cv,
    bounds,
    evaluate,
    evaluate_constraints,
    evaluate_objectives,
    join,
    repair_balance,
    repair_bounds,
    split,
    storage_levels,
)

# stock device table values used by the hand computations below
RTO_ETA, RTO_BETA, RTO_MAX, RTO_MIN = 3.0, 0.6, 150.0, 30.0
GT_RAMP = 50.0


def in_box(s, u):
    lo, hi = bounds(s)
    return lo + u * (hi - lo)


def unit_vectors(n_genes):
    return st.lists(st.floats(0, 1), min_size=n_genes, max_size=n_genes).map(np.array)


# ---------------------------------------------------------------- encoding

def test_split_join_roundtrip():
    x = np.arange(18 * 3, dtype=float)
    parts = split(x, 3)
    assert list(parts) == list(VARIABLES)
    np.testing.assert_array_equal(parts["p_gt"], [3, 4, 5])
    np.testing.assert_array_equal(join(parts, 3), x)


def test_wrong_length_is_structural_error():
    s = make_scenario(T=2)
    with pytest.raises(ScenarioError):
        evaluate_objectives(np.zeros(18 * 3), s)


# ---------------------------------------------------------------- objectives

def test_zero_dispatch_costs(scenario):
    x = np.zeros(scenario.n_genes)
    f1, f2 = evaluate_objectives(x, scenario)
    assert f1 == 0.0
    # every renewable forecast and every heat-source cap is abandoned
    expected = 0.0
    for t in range(scenario.T):
        expected += 0.1 * scenario.p_wt_max[t] + 0.12 * scenario.p_pv_max[t]
        expected += 0.6 * 3.0 * 150 + 0.52 * 2.9 * 100 + 0.5 * 2.95 * 80 + 0.2 * 3.1 * 80
    assert f2 == pytest.approx(expected, rel=1e-12)


def test_gas_turbine_purchase_cost():
    s = make_scenario(T=1, price_gas=0.5)
    x = join({"p_gt": np.array([100.0])}, 1)
    assert evaluate_objectives(x, s)[0] == pytest.approx(50.0)


def test_rto_shortfall_contribution():
    s = make_scenario(T=1)
    for dev in ("ashp", "wshp", "gshp"):
        s.devices[dev].beta = 0.0
    x = join({"p_rto": np.array([100.0])}, 1)
    heat = RTO_ETA * 100.0
    assert evaluate_objectives(x, s)[1] == pytest.approx(RTO_BETA * (RTO_ETA * RTO_MAX - heat))
    assert evaluate_objectives(x, s)[1] == pytest.approx(90.0)


def test_storage_terms_gated_by_mode():
    s = make_scenario(T=1)
    on = join({"p_es_in": np.array([20.0]), "x_es_in": np.array([1.0])}, 1)
    off = join({"p_es_in": np.array([20.0]), "x_es_in": np.array([0.0])}, 1)
    assert evaluate_objectives(on, s)[0] == pytest.approx(0.2 * 20.0)
    assert evaluate_objectives(off, s)[0] == 0.0


@given(u=unit_vectors(18 * 2))
def test_f2_nonnegative_in_box(u):
    s = make_scenario(T=2, p_wt_max=[120, 80], p_pv_max=[0, 60])
    assert evaluate_objectives(in_box(s, u), s)[1] >= 0.0


@given(u=unit_vectors(18 * 2), var=st.sampled_from(["p_wt", "p_pv"] + [f"p_{d}" for d in HEAT_DEVICES]),
       t=st.integers(0, 1), frac=st.floats(0, 1))
def test_f2_nonincreasing_in_each_output(u, var, t, frac):
    s = make_scenario(T=2, p_wt_max=[120, 80], p_pv_max=[30, 60])
    x = in_box(s, u)
    lo, hi = bounds(s)
    k = VARIABLES.index(var) * 2 + t
    y = x.copy()
    y[k] = x[k] + frac * (hi[k] - x[k])
    assert evaluate_objectives(y, s)[1] <= evaluate_objectives(x, s)[1] + 1e-9


# ---------------------------------------------------------------- constraints

def test_balanced_single_hour_is_feasible():
    # grid 200 + gt 100 feeds load 240, ashp 30, ec 30; heat and cooling matched
    s = make_scenario(T=1, quiet=("rto", "wshp", "gshp"), p_load=240.0,
                      h_load=0.58 * 100 + 2.9 * 30 - 0.0, q_load=0.65 * 30)
    x = join({"p_grid": [200.0], "p_gt": [100.0], "p_ashp": [30.0], "p_ec": [30.0]}, 1)
    v = evaluate_constraints(x, s)
    assert all(np.all(r == 0.0) for r in v.values())
    assert evaluate(x, s).feasible


def test_electrical_shortfall_residual():
    s = make_scenario(T=1, quiet=("rto", "ashp", "wshp", "gshp"), p_load=510.0)
    x = join({"p_grid": [500.0]}, 1)
    assert evaluate_constraints(x, s)["elec_balance"][0] == pytest.approx(10.0)


def test_ramp_up_excess():
    s = make_scenario(T=2)
    x = join({"p_gt": np.array([100.0, 200.0])}, 2)
    v = evaluate_constraints(x, s)
    np.testing.assert_allclose(v["ramp_up"], [0.0, 200.0 - 100.0 - GT_RAMP])
    np.testing.assert_array_equal(v["ramp_down"], [0.0, 0.0])


def test_ramp_down_excess():
    s = make_scenario(T=3)
    x = join({"p_gt": np.array([300.0, 200.0, 180.0])}, 3)
    np.testing.assert_allclose(evaluate_constraints(x, s)["ramp_down"], [0.0, 50.0, 0.0])


def test_soc_recursion_and_bounds():
    s = make_scenario(T=3)
    es = s.devices["es"]
    x = join({"p_es_in": [30.0, 0, 0], "x_es_in": [1.0, 0, 0],
              "p_es_out": [0, 30.0, 30.0], "x_es_out": [0, 1.0, 1.0]}, 3)
    level, _ = storage_levels(x, s)
    expected = [es.s_init + es.efficiency * 30.0]
    expected.append(expected[-1] - 30.0 / es.efficiency)
    expected.append(expected[-1] - 30.0 / es.efficiency)
    np.testing.assert_allclose(level, expected)
    below = max(0.0, es.s_min - expected[2])
    assert evaluate_constraints(x, s)["soc_es"][2] == pytest.approx(below)


def test_mutual_exclusion_excess():
    s = make_scenario(T=1)
    x = join({"x_ts_in": [1.0], "x_ts_out": [1.0]}, 1)
    assert evaluate_constraints(x, s)["excl_ts"][0] == 1.0


def test_equality_tolerance_clamps():
    s = make_scenario(T=1, quiet=("rto", "ashp", "wshp", "gshp"), p_load=100.0)
    near = join({"p_grid": [100.0 + 5e-4]}, 1)
    far = join({"p_grid": [100.0 + 2e-3]}, 1)
    assert evaluate_constraints(near, s)["elec_balance"][0] == 0.0
    assert evaluate_constraints(far, s)["elec_balance"][0] == pytest.approx(2e-3)


def test_terminal_soc_family_optional():
    s = make_scenario(T=2)
    x = join({"p_es_in": [10.0, 0.0], "x_es_in": [1.0, 0.0]}, 2)
    assert "terminal_es" not in evaluate_constraints(x, s)
    gap = evaluate_constraints(x, s, terminal_soc=True)["terminal_es"]
    np.testing.assert_allclose(gap, [0.0, 0.98 * 10.0])


@given(seed=st.integers(0, 2**32 - 1), T=st.integers(1, 4))
def test_constructed_balanced_vectors_are_feasible(seed, T):
    """Pick any in-box dispatch, then define the loads that it balances exactly."""
    rng = np.random.default_rng(seed)
    s0 = make_scenario(T=T, p_wt_max=rng.uniform(0, 300, T), p_pv_max=rng.uniform(0, 300, T))
    lo, hi = bounds(s0)
    x = repair_bounds(lo + rng.random(s0.n_genes) * (hi - lo), s0)
    for b in BINARIES:  # storage idle keeps the SoC inside its band
        x[VARIABLES.index(b) * T:(VARIABLES.index(b) + 1) * T] = 0.0
    gt = split(x, T)["p_gt"]
    for t in range(1, T):
        gt[t] = np.clip(gt[t], gt[t - 1] - 50, gt[t - 1] + 50)
    v = split(x, T)
    d = s0.devices
    supply = v["p_grid"] + v["p_gt"] + v["p_wt"] + v["p_pv"]
    use = v["p_rto"] + v["p_ashp"] + v["p_wshp"] + v["p_gshp"] + v["p_ec"]
    heat = d["gt"].eta_gt * v["p_gt"] + sum(d[k].eta * v[f"p_{k}"] for k in HEAT_DEVICES) - v["p_ac"]
    cool = d["ec"].eta * v["p_ec"] + d["ac"].eta * v["p_ac"]
    loads = dict(p_load=supply - use, h_load=heat, q_load=cool)
    if any(np.any(l < 0) for l in loads.values()):
        return
    s = make_scenario(T=T, p_wt_max=s0.p_wt_max, p_pv_max=s0.p_pv_max, **loads)
    viol = evaluate_constraints(x, s)
    assert all(np.all(r == 0.0) for r in viol.values())
    # knocking one balance off by 1 kW is reported
    y = x.copy()
    y[VARIABLES.index("p_grid") * T] += 1.0
    assert evaluate_constraints(y, s)["elec_balance"][0] == pytest.approx(1.0)


@given(T=st.integers(1, 24))
def test_zero_storage_action_keeps_initial_soc(T):
    s = make_scenario(T=T)
    x = np.zeros(s.n_genes)
    es, ts = storage_levels(x, s)
    assert np.all(es == s.devices["es"].s_init) and np.all(ts == s.devices["ts"].s_init)
    v = evaluate_constraints(x, s)
    assert np.all(v["soc_es"] == 0.0) and np.all(v["soc_ts"] == 0.0)


def test_violation_shapes_and_schema(scenario):
    x = np.zeros(scenario.n_genes)
    v = evaluate_constraints(x, scenario)
    assert scenario.n_genes == 432
    assert set(v) == set(FAMILIES)
    assert all(r.shape == (24,) and np.all(r >= 0) for r in v.values())


# ---------------------------------------------------------------- aggregation

def test_aggregate_cv_examples():
    s = make_scenario(T=1, p_load=1000.0)
    viol = {k: np.zeros(1) for k in FAMILIES}
    assert aggregate_cv(viol, s) == 0.0
    viol["elec_balance"] = np.array([10.0])
    assert aggregate_cv(viol, s) == pytest.approx(0.01)


@given(seed=st.integers(0, 2**32 - 1))
def test_aggregate_cv_is_linear(seed):
    rng = np.random.default_rng(seed)
    s = make_scenario(T=3, p_load=[900, 1000, 800], h_load=500, q_load=100)
    viol = {k: rng.uniform(0, 5, 3) * (rng.random() < 0.5) for k in FAMILIES}
    doubled = {k: 2 * v for k, v in viol.items()}
    assert aggregate_cv(doubled, s) == pytest.approx(2 * aggregate_cv(viol, s), rel=1e-12)
    assert (aggregate_cv(viol, s) == 0) == all(np.all(v == 0) for v in viol.values())


# ---------------------------------------------------------------- repair

def test_repair_in_box_identity():
    s = make_scenario(T=2, p_wt_max=[50, 60], p_pv_max=[10, 0])
    lo, hi = bounds(s)
    x = (lo + hi) / 2
    for b in BINARIES:
        k = VARIABLES.index(b) * 2
        x[k:k + 2] = [1.0, 0.0] if b.endswith("_in") else [0.0, 1.0]
    np.testing.assert_array_equal(repair_bounds(x, s), x)


def test_repair_clamps_rto_minimum():
    s = make_scenario(T=1)
    x = join({"p_rto": [10.0]}, 1)
    assert split(repair_bounds(x, s), 1)["p_rto"][0] == RTO_MIN


def test_repair_resolves_both_modes_on():
    s = make_scenario(T=1)
    x = join({"x_es_in": [1.0], "x_es_out": [1.0], "p_es_in": [20.0], "p_es_out": [5.0]}, 1)
    r = split(repair_bounds(x, s), 1)
    assert (r["x_es_in"][0], r["x_es_out"][0]) == (1.0, 0.0)
    x = join({"x_es_in": [0.7], "x_es_out": [0.9], "p_es_in": [5.0], "p_es_out": [20.0]}, 1)
    r = split(repair_bounds(x, s), 1)
    assert (r["x_es_in"][0], r["x_es_out"][0]) == (0.0, 1.0)


@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 1e4))
def test_repair_idempotent(seed, scale):
    s = make_scenario(T=3, p_wt_max=[100, 200, 0], p_pv_max=[0, 50, 80], p_load=500, h_load=600, q_load=100)
    x = np.random.default_rng(seed).normal(0, scale, s.n_genes)
    once = repair_bounds(x, s)
    np.testing.assert_array_equal(repair_bounds(once, s), once)
    lo, hi = bounds(s)
    assert np.all(once >= lo) and np.all(once <= hi)
    p = DispatchProblem(s)
    full = p.repair(x)
    np.testing.assert_array_equal(repair_bounds(full, s), full)


def test_balance_repair_closes_reachable_balances(scenario):
    rng = np.random.default_rng(3)
    lo, hi = bounds(scenario)
    X = repair_balance(repair_bounds(lo + rng.random((50, scenario.n_genes)) * (hi - lo), scenario), scenario)
    v = evaluate_constraints(X, scenario)
    assert np.all(v["cool_balance"] == 0.0)
    assert np.all(v["ramp_up"] == 0.0) and np.all(v["ramp_down"] == 0.0)
    assert np.all(v["soc_es"] == 0.0) and np.all(v["soc_ts"] == 0.0)
    lo2, hi2 = bounds(scenario)
    assert np.all(X >= lo2 - 1e-9) and np.all(X <= hi2 + 1e-9)


@given(seed=st.integers(0, 2**32 - 1))
def test_evaluation_is_pure(seed):
    s = make_scenario(T=2, p_wt_max=[100, 80], p_load=300, h_load=400)
    X = np.random.default_rng(seed).uniform(0, 200, (5, s.n_genes))
    copy = X.copy()
    p = DispatchProblem(s)
    F1, cv1 = p.evaluate(X)
    F2, cv2 = p.evaluate(X)
    assert F1.tobytes() == F2.tobytes() and cv1.tobytes() == cv2.tobytes()
    np.testing.assert_array_equal(X, copy)


def test_batch_matches_single(scenario):
    rng = np.random.default_rng(0)
    p = DispatchProblem(scenario)
    X = p.sample(4, rng)
    F, cv = p.evaluate(X)
    for i in range(4):
        e = evaluate(X[i], scenario)
        np.testing.assert_array_equal(e.f, F[i])
        assert e.cv == cv[i]
