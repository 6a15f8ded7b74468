"""Scenario files: a YAML document with a ``devices`` table and a CSV series.

Layout of the YAML document::

    name: default
    series: default_series.csv      # relative to the YAML file
    devices:
      - {name: grid, p_max: 800}
      - {name: gt, p_max: 350, ramp_up: 50, ramp_down: 50, eta_gt: 0.58}
      ...

The CSV header is ``t,p_load,h_load,q_load,p_wt_max,p_pv_max,price_grid,price_gas``
with one row per dispatch step.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .model import DEVICE_NAMES, DeviceParams, Scenario, ScenarioError

CSV_HEADER = ("t", "p_load", "h_load", "q_load", "p_wt_max", "p_pv_max", "price_grid", "price_gas")
_DEVICE_FIELDS = {f.name for f in fields(DeviceParams)}


def table_one_devices() -> dict[str, DeviceParams]:
    """Stock device parameters of the coal-mine system.

    Storage SoC bands and initial levels are placeholders sized to the
    30 kW power rating (five hours at full power).
    """
    devs = [
        DeviceParams("grid", p_max=800.0),
        DeviceParams("gt", p_max=350.0, ramp_up=50.0, ramp_down=50.0, eta_gt=0.58),
        DeviceParams("wt", alpha=0.3, beta=0.1),
        DeviceParams("pv", alpha=0.32, beta=0.12),
        DeviceParams("rto", alpha=0.165, beta=0.6, p_min=30.0, p_max=150.0, eta=3.0),
        DeviceParams("ashp", alpha=0.16, beta=0.52, p_min=30.0, p_max=100.0, eta=2.9),
        DeviceParams("wshp", alpha=0.163, beta=0.5, p_min=30.0, p_max=80.0, eta=2.95),
        DeviceParams("gshp", alpha=0.165, beta=0.2, p_min=30.0, p_max=80.0, eta=3.1),
        DeviceParams("ec", alpha=0.2, p_max=280.0, eta=0.65),
        DeviceParams("ac", alpha=0.3, p_max=260.0, eta=0.7),
        DeviceParams("es", alpha=0.2, charge_max=30.0, discharge_max=30.0, efficiency=0.98,
                     s_min=15.0, s_max=150.0, s_init=75.0),
        DeviceParams("ts", alpha=0.1, charge_max=30.0, discharge_max=30.0, efficiency=0.95,
                     s_min=15.0, s_max=150.0, s_init=75.0),
    ]
    return {d.name: d for d in devs}


def read_series(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ScenarioError(f"{path}: header must be {','.join(CSV_HEADER)}, got {reader.fieldnames}")
        rows = list(reader)
    if not rows:
        raise ScenarioError(f"{path}: no data rows")
    try:
        series = {key: np.array([float(r[key]) for r in rows]) for key in CSV_HEADER}
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    if not np.array_equal(series["t"], np.arange(len(rows))) and not np.array_equal(series["t"], np.arange(1, len(rows) + 1)):
        raise ScenarioError(f"{path}: column t must count 0..T-1 or 1..T")
    return series


def write_series(s: Scenario, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for t in range(s.T):
            w.writerow([t + 1] + [repr(float(getattr(s, key)[t])) for key in CSV_HEADER[1:]])


def _device(record: dict) -> DeviceParams:
    unknown = set(record) - _DEVICE_FIELDS
    if unknown:
        raise ScenarioError(f"device {record.get('name')!r}: unknown fields {sorted(unknown)}")
    if "name" not in record:
        raise ScenarioError("device record without a name")
    return DeviceParams(**{k: (float(v) if k != "name" and v is not None else v) for k, v in record.items()})


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario document and its series CSV, validating both."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "devices" not in doc or "series" not in doc:
        raise ScenarioError(f"{path}: need top-level 'devices' and 'series' keys")
    devices = {}
    for record in doc["devices"]:
        dev = _device(dict(record))
        if dev.name in devices:
            raise ScenarioError(f"{path}: duplicate device {dev.name!r}")
        devices[dev.name] = dev
    series = read_series(path.parent / doc["series"])
    series.pop("t")
    return Scenario(devices=devices, name=doc.get("name", path.stem), **series)


def save_scenario(s: Scenario, path: str | Path, series_name: str | None = None) -> Path:
    """Write ``s`` as a YAML document plus a sibling CSV; returns the YAML path."""
    path = Path(path)
    series_name = series_name or f"{path.stem}_series.csv"
    defaults = asdict(DeviceParams(name=""))
    records = []
    for name in DEVICE_NAMES:
        rec = {k: v for k, v in asdict(s.devices[name]).items() if k == "name" or v != defaults[k]}
        records.append(rec)
    doc = {"name": s.name, "series": series_name, "devices": records}
    path.write_text(yaml.safe_dump(doc, sort_keys=False, default_flow_style=None))
    write_series(s, path.parent / series_name)
    return path


def default_scenario_path() -> Path:
    return Path(str(resources.files("mtdispatch") / "data" / "default_scenario.yaml"))


def default_scenario() -> Scenario:
    """The shipped 24-hour synthetic day (approximate curve shapes, see data/README)."""
    return load_scenario(default_scenario_path())
