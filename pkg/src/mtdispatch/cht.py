"""Constraint handling techniques used to define the two tasks.

Each technique is a strict partial order over evaluated individuals given
objective vectors ``f`` (minimised) and aggregated violations ``cv``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Kind(enum.Enum):
    CDP = "cdp"
    EPSILON = "epsilon"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class EpsilonSchedule:
    """eps(G) = eps0 * max(0, 1 - G / (g_cut * G_max)) ** cp."""

    eps0: float
    cp: float = 2.0
    g_cut: float = 0.8

    def __post_init__(self):
        if self.eps0 < 0:
            raise ValueError("eps0 must be nonnegative")
        if not 0.0 < self.g_cut <= 1.0:
            raise ValueError("g_cut must lie in (0, 1]")


@dataclass(frozen=True)
class ChtKind:
    kind: Kind
    schedule: EpsilonSchedule | None = None

    @classmethod
    def cdp(cls) -> "ChtKind":
        return cls(Kind.CDP)

    @classmethod
    def epsilon(cls, schedule: EpsilonSchedule) -> "ChtKind":
        return cls(Kind.EPSILON, schedule)

    @classmethod
    def hybrid(cls, schedule: EpsilonSchedule) -> "ChtKind":
        return cls(Kind.HYBRID, schedule)

    def epsilon_at(self, G: int, G_max: int) -> float:
        if self.schedule is None:
            return 0.0
        return epsilon_value(self.schedule, G, G_max)


def epsilon_value(sched: EpsilonSchedule, G: float, G_max: float) -> float:
    if G_max <= 0:
        return 0.0 if G > 0 else sched.eps0
    horizon = sched.g_cut * G_max
    ratio = max(0.0, 1.0 - G / horizon)
    return sched.eps0 * ratio**sched.cp


def initial_epsilon(cv: np.ndarray, policy: str) -> float:
    """Anchor eps0 from an initial population's violations.

    ``policy`` is ``"median"``, ``"max"`` or ``"fixed:<value>"``.
    """
    if policy == "median":
        return float(np.median(cv))
    if policy == "max":
        return float(np.max(cv))
    if policy.startswith("fixed:"):
        return float(policy.split(":", 1)[1])
    raise ValueError(f"unknown epsilon0 policy {policy!r}")


def pareto_matrix(f: np.ndarray) -> np.ndarray:
    """``P[i, j]`` true when ``f[i]`` Pareto-dominates ``f[j]`` (minimisation)."""
    f = np.asarray(f, dtype=float)
    le = np.ones((len(f), len(f)), dtype=bool)
    lt = np.zeros((len(f), len(f)), dtype=bool)
    for m in range(f.shape[1]):
        col = f[:, m]
        le &= col[:, None] <= col[None, :]
        lt |= col[:, None] < col[None, :]
    return le & lt


def _cdp_like(pareto, cv, feasible):
    """Pairwise matrix ``D[i, j]``: i dominates j under CDP with the given feasibility mask."""
    feas_i, feas_j = feasible[:, None], feasible[None, :]
    lower_cv = cv[:, None] < cv[None, :]
    return np.where(feas_i & feas_j, pareto, np.where(feas_i | feas_j, feas_i, lower_cv))


def dominance_matrix(cht: ChtKind, f: np.ndarray, cv: np.ndarray, eps: float = 0.0) -> np.ndarray:
    """Boolean ``(N, N)`` matrix with ``D[i, j]`` true when i dominates j."""
    cv = np.asarray(cv, dtype=float)
    pareto = pareto_matrix(f)
    cdp = _cdp_like(pareto, cv, cv <= 0.0)
    if cht.kind is Kind.CDP:
        return cdp
    relaxed = _cdp_like(pareto, cv, cv <= eps)
    if cht.kind is Kind.EPSILON:
        return relaxed
    # hybrid: CDP decides; epsilon order only breaks CDP-incomparable pairs
    incomparable = ~cdp & ~cdp.T
    return cdp | (incomparable & relaxed)


def dominates_under(cht: ChtKind, a, b, eps: float = 0.0) -> int:
    """Compare two evaluated individuals.

    ``a`` and ``b`` expose ``f`` (objective pair) and ``cv``.  Returns ``1``
    if a dominates b, ``-1`` if b dominates a and ``0`` if incomparable.
    """
    f = np.array([a.f, b.f], dtype=float)
    cv = np.array([a.cv, b.cv], dtype=float)
    D = dominance_matrix(cht, f, cv, eps)
    if D[0, 1]:
        return 1
    if D[1, 0]:
        return -1
    return 0
