"""Two-task differential evolution with elite-guided knowledge transfer.

Task 1 ranks under the CDP/epsilon hybrid, task 2 under the epsilon
relaxation alone.  Every generation each task breeds one offspring per
parent, sends its SCD-elite individuals to the other task, and reduces the
merged pool back to ``N`` by environmental selection.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cht import ChtKind, EpsilonSchedule, initial_epsilon
from .config import RunConfig
from .evo import (
    Population,
    anm_offspring,
    assign_ranks,
    build_neighborhoods,
    crossover_and_repair,
    drop_duplicates,
    environmental_selection,
    nondominated_sort,
    select_best,
)
from .model import DispatchProblem, Scenario

TASK_MAIN, TASK_AUX = 0, 1


@dataclass
class TaskState:
    name: str
    cht: ChtKind
    pop: Population
    nbrs: np.ndarray | None = None

    def epsilon(self, G: int, G_max: int) -> float:
        return self.cht.epsilon_at(G, G_max)


@dataclass
class RunResult:
    X: np.ndarray
    F: np.ndarray
    CV: np.ndarray
    feasible: bool
    tasks: list[TaskState]
    best_cv: list[float] = field(default_factory=list)
    n_feasible: list[int] = field(default_factory=list)
    seconds: float = 0.0


def select_transfer(pop: Population, fraction: float) -> np.ndarray:
    """Indices of the top ``ceil(fraction * |front|)`` members of every front by SCD.

    ``pop.front`` and ``pop.scd`` must be current.  Ties keep the lower index.
    """
    if len(pop) == 0 or fraction <= 0:
        return np.empty(0, dtype=int)
    chosen = []
    for r in np.unique(pop.front):
        members = np.flatnonzero(pop.front == r)
        count = math.ceil(fraction * len(members) - 1e-9)
        order = np.argsort(-pop.scd[members], kind="stable")
        chosen.append(members[np.sort(order[:count])])
    return np.concatenate(chosen)


def _rng(seed: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *counters]))


def _evaluate(problem: DispatchProblem, X: np.ndarray) -> Population:
    F, cv = problem.evaluate(X)
    return Population(X, F, cv)


def final_front(pop: Population) -> tuple[np.ndarray, bool]:
    """Feasible non-dominated members of ``pop`` or, failing that, the CDP first front."""
    feasible = np.flatnonzero(pop.CV <= 0.0)
    if feasible.size:
        first = nondominated_sort(pop.F[feasible], pop.CV[feasible], ChtKind.cdp())[0]
        return feasible[first], True
    return nondominated_sort(pop.F, pop.CV, ChtKind.cdp())[0], False


def initial_tasks(problem: DispatchProblem, cfg: RunConfig) -> list[TaskState]:
    n_tasks = 1 if cfg.algorithm == "single-task" else 2
    tasks = []
    for k in range(n_tasks):
        X = problem.sample(cfg.pop_size, _rng(cfg.seed, k, 0))
        pop = _evaluate(problem, X)
        sched = EpsilonSchedule(initial_epsilon(pop.CV, cfg.epsilon0_policy), cfg.cp, cfg.g_cut)
        cht = ChtKind.hybrid(sched) if k == TASK_MAIN else ChtKind.epsilon(sched)
        assign_ranks(pop, cht, cht.epsilon_at(0, cfg.generations))
        tasks.append(TaskState("main" if k == TASK_MAIN else "auxiliary", cht, pop))
    return tasks


def run(scenario: Scenario, cfg: RunConfig, problem: DispatchProblem | None = None) -> RunResult:
    """Evolve both tasks for ``cfg.generations`` generations from ``cfg.seed``."""
    start = time.perf_counter()
    if problem is None:
        problem = DispatchProblem(scenario, cfg.tau_eq, cfg.terminal_soc, cfg.balance_repair)
    N, G_max = cfg.pop_size, cfg.generations
    use_nbrs = cfg.algorithm in ("mmde-ekt-anm", "mmde-anm", "single-task")
    random_transfer = cfg.algorithm == "mmde-anm"
    tasks = initial_tasks(problem, cfg)
    best_cv = [float(tasks[TASK_MAIN].pop.CV.min())]
    n_feasible = [int(np.sum(tasks[TASK_MAIN].pop.CV <= 0))]

    for G in range(1, G_max + 1):
        offspring = []
        for k, task in enumerate(tasks):
            rng = _rng(cfg.seed, k, G)
            pop = task.pop
            task.nbrs = build_neighborhoods(pop.F, pop.X, cfg.nr) if use_nbrs else None
            mutants, _ = anm_offspring(pop.X, task.nbrs, select_best(pop), G, G_max, rng, cfg.f_pool)
            trials = crossover_and_repair(pop.X, mutants, cfg.cr, rng, problem.repair)
            offspring.append(_evaluate(problem, trials))

        if len(tasks) == 2:
            transfers = []
            for k, task in enumerate(tasks):
                idx = select_transfer(task.pop, cfg.transfer_fraction)
                if random_transfer and idx.size:
                    idx = np.sort(_rng(cfg.seed, k, G, 1).choice(len(task.pop), size=idx.size, replace=False))
                transfers.append(task.pop.take(idx))
            incoming = [transfers[TASK_AUX], transfers[TASK_MAIN]]
        else:
            incoming = [Population(np.empty((0, problem.n_genes)), np.empty((0, 2)), np.empty(0))]

        for k, task in enumerate(tasks):
            merged = Population.concat([task.pop, offspring[k], incoming[k]])
            merged = drop_duplicates(merged, keep_at_least=N)
            task.pop = environmental_selection(merged, N, task.cht, task.epsilon(G, G_max))

        main = tasks[TASK_MAIN].pop
        best_cv.append(float(main.CV.min()))
        n_feasible.append(int(np.sum(main.CV <= 0)))

    idx, feasible = final_front(tasks[TASK_MAIN].pop)
    main = tasks[TASK_MAIN].pop
    return RunResult(
        X=main.X[idx], F=main.F[idx], CV=main.CV[idx], feasible=feasible, tasks=tasks,
        best_cv=best_cv, n_feasible=n_feasible, seconds=time.perf_counter() - start,
    )
