"""
A day-ahead cost/emission trade-off
===================================

Solve the shipped scenario with a modest budget, then read off the two ends of
the front and a balanced compromise.  The full-size setting is
``pop_size=100, generations=800`` and takes well under a minute per run.
"""

import numpy as np

from mtdispatch import RunConfig, default_scenario, run
from mtdispatch.cli import best_member
from mtdispatch.model import split

scenario = default_scenario()
result = run(scenario, RunConfig(pop_size=60, generations=200, seed=1))
print(f"{len(result.F)} points, feasible={result.feasible}, {result.seconds:.1f}s")

# the front is sorted by neither objective; order it by cost
order = np.argsort(result.F[:, 0])
for label, i in (("cheapest", order[0]), ("cleanest", order[-1]), ("compromise", best_member(result.F, result.CV))):
    plan = split(result.X[i], scenario.T)
    print(f"{label:10s} cost {result.F[i, 0]:8.0f}  emission {result.F[i, 1]:7.0f}  "
          f"grid {plan['p_grid'].sum():6.0f} kWh  gas turbine {plan['p_gt'].sum():6.0f} kWh")

# how fast the main task found its first feasible schedule
first = next((g for g, n in enumerate(result.n_feasible) if n > 0), None)
print("first feasible generation:", first)
