"""
Evaluating one dispatch schedule
================================

Draw a random schedule for the shipped 24-hour scenario, look at its cost,
emission and constraint violations, then repair it and look again.
"""

import numpy as np

from mtdispatch import DispatchProblem, default_scenario, evaluate
from mtdispatch.model import split

scenario = default_scenario()
problem = DispatchProblem(scenario)
print(f"{scenario.T} hours, {problem.n_genes} genes")

# a schedule is one flat vector, variable-major: all hours of p_grid, then p_gt, ...
rng = np.random.default_rng(0)
x = rng.uniform(0, 100, problem.n_genes)
schedule = split(x, scenario.T)
print("grid import, first 6 hours:", np.round(schedule["p_grid"][:6], 1))

# cost (currency units) and emission (kg) plus one violation array per family
raw = evaluate(x, scenario)
print(f"\nunrepaired: cost {raw.f[0]:.0f}, emission {raw.f[1]:.0f}, CV {raw.cv:.3f}")
for family, values in raw.violations.items():
    print(f"  {family:14s} worst hour {values.max():8.2f}")

# repair clamps to device limits, resolves storage modes and closes balances where it can
fixed = evaluate(problem.repair(x[None, :])[0], scenario)
print(f"\nrepaired:   cost {fixed.f[0]:.0f}, emission {fixed.f[1]:.0f}, CV {fixed.cv:.3f}")
