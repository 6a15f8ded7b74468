"""Quality indicators for two-objective fronts (minimisation)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cht import pareto_matrix

HV_REF = (1.1, 1.1)


@dataclass
class ReferenceSet:
    points: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def normalize(self, F: np.ndarray) -> np.ndarray:
        """Map objective vectors into the unit box spanned by the reference bounds."""
        span = np.where(self.upper > self.lower, self.upper - self.lower, 1.0)
        return (np.asarray(F, dtype=float) - self.lower) / span


@dataclass
class RunStats:
    mean: float
    std: float
    best: float
    worst: float
    runs: int

    @classmethod
    def of(cls, values: Sequence[float], higher_is_better: bool = False) -> "RunStats":
        """Population (divide-by-n) std; any non-finite sample makes mean and std non-finite."""
        v = np.asarray(values, dtype=float)
        best, worst = (v.max(), v.min()) if higher_is_better else (v.min(), v.max())
        if np.all(np.isfinite(v)):
            mean, std = float(v.mean()), float(v.std())
        else:
            mean, std = float(np.sum(v)), float("inf")
        return cls(mean, std, float(best), float(worst), len(v))


def nondominated(F: np.ndarray) -> np.ndarray:
    """Unique non-dominated rows of ``F`` (lexicographically sorted)."""
    F = np.unique(np.atleast_2d(np.asarray(F, dtype=float)), axis=0)
    if len(F) == 0:
        return F
    return F[~pareto_matrix(F).any(axis=0)]


def build_reference(fronts: Sequence[np.ndarray]) -> ReferenceSet:
    """Non-dominated union of feasible fronts; bounds are the union's min/max."""
    parts = [np.atleast_2d(np.asarray(f, dtype=float)) for f in fronts if np.size(f)]
    if not parts:
        raise ValueError("cannot build a reference set from empty fronts")
    union = np.vstack(parts)
    return ReferenceSet(nondominated(union), union.min(axis=0), union.max(axis=0))


def igd(front: np.ndarray, ref: np.ndarray | ReferenceSet) -> float:
    """Mean distance from each reference point to its nearest front point.

    A :class:`ReferenceSet` switches both sets into its normalized space.
    An empty front scores ``inf``.
    """
    front = np.asarray(front, dtype=float).reshape(-1, 2) if np.size(front) else np.empty((0, 2))
    if len(front) == 0:
        return float("inf")
    if isinstance(ref, ReferenceSet):
        R = ref.normalize(ref.points)
        front = ref.normalize(front)
    else:
        R = np.atleast_2d(np.asarray(ref, dtype=float))
    dist = np.sqrt(((R[:, None, :] - front[None, :, :]) ** 2).sum(axis=-1))
    return float(dist.min(axis=1).mean())


def hv(front: np.ndarray, ref_point: Sequence[float] = HV_REF) -> float:
    """Area dominated by ``front`` inside the box bounded by ``ref_point``.

    Points are clipped to the reference point first, so members beyond it
    contribute nothing.
    """
    if not np.size(front):
        return 0.0
    r = np.asarray(ref_point, dtype=float)
    P = np.minimum(np.asarray(front, dtype=float).reshape(-1, 2), r)
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    area, level = 0.0, r[1]
    for x, y in P:
        if y < level:
            area += (r[0] - x) * (level - y)
            level = y
    return float(area)


def hv_normalized(front: np.ndarray, ref: ReferenceSet, ref_point: Sequence[float] = HV_REF) -> float:
    return hv(ref.normalize(front), ref_point) if np.size(front) else 0.0


def hv_monte_carlo(front: np.ndarray, ref_point: Sequence[float], n: int, rng: np.random.Generator,
                   lower: Sequence[float] | None = None) -> tuple[float, float]:
    """Box-sampling estimate of :func:`hv` and its standard error."""
    P = np.asarray(front, dtype=float).reshape(-1, 2)
    r = np.asarray(ref_point, dtype=float)
    lo = P.min(axis=0) if lower is None else np.asarray(lower, dtype=float)
    box = np.prod(r - lo)
    U = lo + rng.random((n, 2)) * (r - lo)
    hit = np.zeros(n, dtype=bool)
    for p in P:
        hit |= np.all(U >= p, axis=1)
    frac = hit.mean()
    return float(box * frac), float(box * np.sqrt(frac * (1 - frac) / n))
