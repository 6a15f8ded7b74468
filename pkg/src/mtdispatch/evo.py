"""Population machinery for the differential evolution tasks.

Populations are stored column-wise (gene matrix, objective matrix, violation
vector) so every operator works on whole arrays.  :class:`Individual` is a
row view for code that prefers records.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cht import ChtKind, dominance_matrix

F_POOL = (0.6, 0.8, 1.0)
SPREAD_FLOOR = 1e-12


@dataclass
class Individual:
    genes: np.ndarray
    f: np.ndarray
    cv: float
    front: int = 0
    scd: float = np.inf


@dataclass
class Population:
    X: np.ndarray
    F: np.ndarray
    CV: np.ndarray
    front: np.ndarray = field(default=None)
    scd: np.ndarray = field(default=None)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        self.CV = np.asarray(self.CV, dtype=float).reshape(-1)
        n = len(self.X)
        if self.front is None:
            self.front = np.zeros(n, dtype=int)
        if self.scd is None:
            self.scd = np.full(n, np.inf)

    def __len__(self) -> int:
        return len(self.X)

    def take(self, idx) -> "Population":
        idx = np.asarray(idx, dtype=int)
        return Population(self.X[idx], self.F[idx], self.CV[idx], self.front[idx], self.scd[idx])

    def individual(self, i: int) -> Individual:
        return Individual(self.X[i], self.F[i], float(self.CV[i]), int(self.front[i]), float(self.scd[i]))

    @staticmethod
    def concat(parts: Sequence["Population"]) -> "Population":
        parts = [p for p in parts if len(p)]
        return Population(
            np.concatenate([p.X for p in parts]),
            np.concatenate([p.F for p in parts]),
            np.concatenate([p.CV for p in parts]),
            np.concatenate([p.front for p in parts]),
            np.concatenate([p.scd for p in parts]),
        )


# --------------------------------------------------------------------------- sorting

def nondominated_sort(F: np.ndarray, CV: np.ndarray, cht: ChtKind, eps: float = 0.0) -> list[np.ndarray]:
    """Peel fronts off the dominance relation induced by ``cht`` at ``eps``."""
    D = dominance_matrix(cht, F, CV, eps)
    n = len(D)
    dominated_by = D.sum(axis=0).astype(int)
    alive = np.ones(n, dtype=bool)
    fronts = []
    while alive.any():
        current = np.flatnonzero(alive & (dominated_by == 0))
        if current.size == 0:
            raise RuntimeError("dominance relation has a cycle")
        fronts.append(current)
        alive[current] = False
        dominated_by -= D[current].sum(axis=0)
    return fronts


def _side_lengths(V: np.ndarray, boundary: float | None) -> np.ndarray:
    """Per-coordinate normalized cuboid sides, shape ``(n, d)``.

    Neighbours are the nearest *distinct* values, so tied points get equal
    sides and the result does not depend on input order.  A group of ``m``
    tied points shares its gap, each member getting ``1/m`` of it.  A lone
    point at the minimum or maximum of a coordinate gets ``boundary``;
    ``None`` means the largest interior side of that coordinate (0 when
    there is none).  Tied groups at an extreme get their inner gap only.
    """
    n, d = V.shape
    cols = np.arange(d)
    order = np.argsort(V, axis=0, kind="stable")
    flat = order * d + cols
    S = V.ravel()[flat]
    span = S[-1] - S[0]
    k = np.arange(n)[:, None]
    differs = S[1:] != S[:-1]
    start = np.maximum.accumulate(np.vstack([np.zeros((1, d), int), np.where(differs, k[1:], 0)]), axis=0)
    stop = np.minimum.accumulate(np.vstack([np.where(differs, k[:-1], n - 1), np.full((1, d), n - 1)])[::-1], axis=0)[::-1]
    Sf = S.ravel()
    prev = Sf[np.maximum(start - 1, 0) * d + cols]
    nxt = Sf[np.minimum(stop + 1, n - 1) * d + cols]
    size = stop - start + 1
    is_edge = (S == S[0]) | (S == S[-1])
    live = span > 0
    side = np.where(live, (nxt - prev) / np.where(live, span, 1.0), 0.0)
    fill = np.where(is_edge, 0.0, side).max(axis=0) if boundary is None else np.full(d, boundary)
    side = np.where(is_edge & live & (size == 1), fill, side) / size
    out = np.empty(n * d)
    out[flat.ravel()] = side.ravel()
    return out.reshape(n, d)


def crowding_objective(F: np.ndarray) -> np.ndarray:
    """Mean normalized cuboid side in objective space; extremes are +inf."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if len(F) <= 2:
        return np.full(len(F), np.inf)
    return _side_lengths(F, np.inf).mean(axis=1)


def crowding_decision(X: np.ndarray) -> np.ndarray:
    """Mean normalized cuboid side in decision space; extremes take the largest interior side."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) <= 2:
        return np.ones(len(X))
    return _side_lengths(X, None).mean(axis=1)


def special_crowding_distance(F: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Special crowding distance of one front.

    Combines objective- and decision-space crowding: a point that is
    sparser than average in either space keeps the larger of its two
    distances, every other point keeps the smaller.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = len(F)
    if n <= 2:
        return np.full(n, np.inf)
    cd_obj = crowding_objective(F)
    cd_dec = crowding_decision(X)
    finite = np.isfinite(cd_obj)
    # exactly rounded sums keep the above-average test independent of input order
    avg_obj = math.fsum(cd_obj[finite]) / finite.sum() if finite.any() else np.inf
    avg_dec = math.fsum(cd_dec) / n
    sparse = (cd_obj > avg_obj) | (cd_dec > avg_dec)
    return np.where(sparse, np.maximum(cd_obj, cd_dec), np.minimum(cd_obj, cd_dec))


def assign_ranks(pop: Population, cht: ChtKind, eps: float = 0.0) -> list[np.ndarray]:
    """Fill ``pop.front`` and ``pop.scd`` in place; returns the fronts."""
    fronts = nondominated_sort(pop.F, pop.CV, cht, eps)
    for r, members in enumerate(fronts):
        pop.front[members] = r
        pop.scd[members] = special_crowding_distance(pop.F[members], pop.X[members])
    return fronts


def environmental_selection(pop: Population, N: int, cht: ChtKind, eps: float = 0.0) -> Population:
    """Keep ``N`` individuals: whole fronts first, the split front by descending SCD.

    Survivors come back with ``front`` and ``scd`` filled in.
    """
    if len(pop) < N:
        raise ValueError(f"cannot select {N} survivors from {len(pop)} individuals")
    keep, ranks = [], []
    for r, members in enumerate(nondominated_sort(pop.F, pop.CV, cht, eps)):
        room = N - len(keep)
        if room <= 0:
            break
        if len(members) > room:
            scd = special_crowding_distance(pop.F[members], pop.X[members])
            members = members[np.sort(np.argsort(-scd, kind="stable")[:room])]
        keep.extend(members.tolist())
        ranks.append(members)
    survivors = pop.take(keep)
    # a prefix of whole fronts plus part of the next one peels identically
    start = 0
    for r, members in enumerate(ranks):
        sl = slice(start, start + len(members))
        survivors.front[sl] = r
        survivors.scd[sl] = special_crowding_distance(survivors.F[sl], survivors.X[sl])
        start += len(members)
    return survivors


def drop_duplicates(pop: Population, keep_at_least: int = 0) -> Population:
    """Remove repeated genomes, keeping first occurrences in order.

    If fewer than ``keep_at_least`` distinct genomes exist, the earliest
    repeats are kept to make up the number.
    """
    _, first = np.unique(pop.X, axis=0, return_index=True)
    unique = np.zeros(len(pop), dtype=bool)
    unique[first] = True
    short = keep_at_least - int(unique.sum())
    if short > 0:
        unique[np.flatnonzero(~unique)[:short]] = True
    return pop if unique.all() else pop.take(np.flatnonzero(unique))


def select_best(pop: Population) -> int:
    """Index of the guide for current-to-best mutation.

    Feasible individuals first (lowest violation if none is feasible), then
    lowest front, then largest SCD, then lowest index.
    """
    cv = pop.CV
    pool = np.flatnonzero(cv <= 0.0)
    if pool.size == 0:
        pool = np.flatnonzero(cv == cv.min())
    pool = pool[pop.front[pool] == pop.front[pool].min()]
    return int(pool[np.argmax(pop.scd[pool])])


# --------------------------------------------------------------------------- neighbourhoods

def _normalize(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = A.min(axis=0), A.max(axis=0)
    spread = hi - lo
    return (A - lo) / np.maximum(spread, SPREAD_FLOOR), spread


def build_neighborhoods(F: np.ndarray, X: np.ndarray, nr: int) -> np.ndarray:
    """Indices of each individual's ``min(nr, N-1)`` nearest neighbours by angle.

    Angles are measured at the ideal point in min-max normalized objective
    space.  If any objective has no spread, Euclidean distance in
    normalized decision space is used instead.  Ties go to the lower index.
    """
    F = np.asarray(F, dtype=float)
    n = len(F)
    if n < 2:
        raise ValueError("neighbourhoods need at least two individuals")
    k = min(nr, n - 1)
    Fn, spread = _normalize(F)
    if np.any(spread < SPREAD_FLOOR):
        Xn, _ = _normalize(np.asarray(X, dtype=float))
        sq = (Xn**2).sum(axis=1)
        dist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * Xn @ Xn.T, 0.0)
    else:
        norm = np.linalg.norm(Fn, axis=1)
        unit = np.divide(Fn, norm[:, None], out=np.zeros_like(Fn), where=norm[:, None] > 0)
        cos = np.clip(unit @ unit.T, -1.0, 1.0)
        dist = np.arccos(cos)
        zero = norm == 0
        dist[zero, :] = np.pi / 2
        dist[:, zero] = np.pi / 2
    np.fill_diagonal(dist, np.inf)
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


# --------------------------------------------------------------------------- variation

def _pair(rng: np.random.Generator, size: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Two index arrays in ``[0, n)`` with ``a != b`` elementwise."""
    a = rng.integers(n, size=size)
    b = rng.integers(n - 1, size=size)
    b = b + (b >= a)
    return a, b


def anm_offspring(
    X: np.ndarray,
    nbrs: np.ndarray | None,
    best: int,
    G: int,
    G_max: int,
    rng: np.random.Generator,
    f_pool: Sequence[float] = F_POOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Adaptive neighbourhood mutation for every individual at once.

    With probability ``1 - G/G_max`` an individual takes a rand/1 step
    between two distinct members of its neighbourhood; otherwise a
    current-to-best/1 step with a whole-population difference.  Passing
    ``nbrs=None`` draws the rand/1 pair from the whole population (the
    no-neighbourhood ablation).  Returns the mutants and a boolean mask of
    which individuals took the rand/1 branch.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    pc = 1.0 - G / G_max if G_max > 0 else 1.0
    u = rng.random(n)
    F = np.asarray(f_pool, dtype=float)[rng.integers(len(f_pool), size=n)][:, None]
    r1, r2 = _pair(rng, n, n)
    if nbrs is not None and nbrs.shape[1] >= 2:
        a, b = _pair(rng, n, nbrs.shape[1])
        rows = np.arange(n)
        q1, q2 = nbrs[rows, a], nbrs[rows, b]
    else:
        q1, q2 = _pair(rng, n, n)
    local = u < pc
    rand1 = X + F * (X[q1] - X[q2])
    to_best = X + F * (X[best] - X) + F * (X[r1] - X[r2])
    return np.where(local[:, None], rand1, to_best), local


def anm_mutate(i: int, X: np.ndarray, nbrs: np.ndarray | None, best: int, G: int, G_max: int,
               rng: np.random.Generator, f_pool: Sequence[float] = F_POOL) -> np.ndarray:
    """Single-individual form of :func:`anm_offspring`."""
    X = np.asarray(X, dtype=float)
    n = len(X)
    pc = 1.0 - G / G_max if G_max > 0 else 1.0
    F = f_pool[rng.integers(len(f_pool))]
    if rng.random() < pc:
        if nbrs is not None and len(nbrs[i]) >= 2:
            a, b = rng.choice(len(nbrs[i]), size=2, replace=False)
            q1, q2 = nbrs[i][a], nbrs[i][b]
        else:
            q1, q2 = rng.choice(n, size=2, replace=False)
        return X[i] + F * (X[q1] - X[q2])
    r1, r2 = rng.choice(n, size=2, replace=False)
    return X[i] + F * (X[best] - X[i]) + F * (X[r1] - X[r2])


def crossover_and_repair(
    target: np.ndarray,
    mutant: np.ndarray,
    cr: float,
    rng: np.random.Generator,
    repair: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Binomial crossover with one guaranteed mutant gene, then ``repair``."""
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant differ in shape")
    T2 = np.atleast_2d(target)
    M2 = np.atleast_2d(mutant)
    n, d = T2.shape
    mask = rng.random((n, d)) < cr
    mask[np.arange(n), rng.integers(d, size=n)] = True
    trial = np.where(mask, M2, T2)
    if repair is not None:
        trial = repair(trial)
    return trial.reshape(target.shape)
