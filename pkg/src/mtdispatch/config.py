"""Run configuration shared by the solver and the command line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import yaml

ALGORITHMS = ("mmde-ekt-anm", "mmde-ekt", "mmde-anm", "single-task")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass
class RunConfig:
    pop_size: int = 300
    generations: int = 5000
    runs: int = 20
    seed: int = 0
    algorithm: str = "mmde-ekt-anm"
    transfer_fraction: float = 0.2
    nr: int = 10
    cr: float = 0.9
    f_pool: tuple[float, ...] = (0.6, 0.8, 1.0)
    epsilon0_policy: str = "median"
    cp: float = 2.0
    g_cut: float = 0.8
    tau_eq: float = 1e-3
    terminal_soc: bool = False
    balance_repair: bool = True
    output_dir: str = "results"

    def __post_init__(self):
        self.f_pool = tuple(float(v) for v in self.f_pool)
        self.validate()

    def validate(self) -> None:
        def bad(name, why):
            raise ConfigError(f"{name}: {why} (got {getattr(self, name)!r})")

        if self.pop_size < 4:
            bad("pop_size", "must be >= 4")
        if self.generations < 0:
            bad("generations", "must be >= 0")
        if self.runs < 1:
            bad("runs", "must be >= 1")
        if self.algorithm not in ALGORITHMS:
            bad("algorithm", f"must be one of {', '.join(ALGORITHMS)}")
        if not 0.0 <= self.transfer_fraction <= 1.0:
            bad("transfer_fraction", "must lie in [0, 1]")
        if self.nr < 1:
            bad("nr", "must be >= 1")
        if not 0.0 <= self.cr <= 1.0:
            bad("cr", "must lie in [0, 1]")
        if not self.f_pool or any(not 0.0 < v <= 2.0 for v in self.f_pool):
            bad("f_pool", "must be nonempty with entries in (0, 2]")
        policy = self.epsilon0_policy
        if policy not in ("median", "max"):
            if not policy.startswith("fixed:"):
                bad("epsilon0_policy", "must be median, max or fixed:<value>")
            try:
                value = float(policy.split(":", 1)[1])
            except ValueError:
                bad("epsilon0_policy", "fixed value is not a number")
            if value < 0:
                bad("epsilon0_policy", "fixed value must be >= 0")
        if self.cp <= 0:
            bad("cp", "must be > 0")
        if not 0.0 < self.g_cut <= 1.0:
            bad("g_cut", "must lie in (0, 1]")
        if self.tau_eq <= 0:
            bad("tau_eq", "must be > 0")

    def replace(self, **changes) -> "RunConfig":
        data = asdict(self)
        data.update(changes)
        return RunConfig(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["f_pool"] = list(self.f_pool)
        return data


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Read a YAML or JSON config; ``None`` values in ``overrides`` are ignored."""
    data = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
