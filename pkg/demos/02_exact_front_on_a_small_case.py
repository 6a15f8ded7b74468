"""
Solver against an exhaustive search
===================================

On a two-hour case with grid import, solar and a battery, every schedule on a
10 kW grid can be enumerated.  The exact Pareto set of that grid is the yardstick
for the solver's front.
"""

import numpy as np

from mtdispatch import RunConfig, run
from mtdispatch import oracle
from mtdispatch.metrics import igd

case = oracle.micro_scenarios()["storage"]
print(f"{oracle.grid_size(case):,} grid points")

# brute force: every point checked against every constraint family
X_exact, front = oracle.pareto_oracle(case)
print(f"exact front: {len(front)} points")
print("  cheapest:", np.round(front[np.argmin(front[:, 0])], 2))
print("  cleanest:", np.round(front[np.argmin(front[:, 1])], 2))

# one grid step in objective space is the resolution limit of the comparison
tolerance = oracle.grid_step_tolerance(case)

for seed in range(3):
    result = run(case.scenario, RunConfig(pop_size=40, generations=300, seed=seed))
    ok = oracle.is_feasible(case.scenario, result.X, case.tau_eq).all()
    print(f"seed {seed}: {len(result.F)} points, independently feasible={ok}, "
          f"IGD {igd(result.F, front):.3f} (one grid step = {tolerance:.3f})")
