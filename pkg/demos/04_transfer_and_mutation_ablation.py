"""
What elite transfer and neighbourhood mutation buy
==================================================

Run the full algorithm and its two ablations on the same seeds and score all of
them against one shared reference set.  With this small budget the gaps are
noisy; the acceptance suite uses 10 seeds at ``pop_size=100, generations=800``.
"""

import numpy as np

from mtdispatch import RunConfig, default_scenario, run
from mtdispatch.metrics import build_reference, hv_normalized, igd

scenario = default_scenario()
seeds = range(3)
variants = ("mmde-ekt-anm", "mmde-ekt", "mmde-anm")
results = {v: [run(scenario, RunConfig(pop_size=60, generations=300, seed=s, algorithm=v)) for s in seeds]
           for v in variants}

# one reference for everybody: the non-dominated union of every feasible front
ref = build_reference([r.F for rs in results.values() for r in rs if r.feasible])

for v, rs in results.items():
    hv = [hv_normalized(r.F, ref) if r.feasible else 0.0 for r in rs]
    gd = [igd(r.F, ref) if r.feasible else np.inf for r in rs]
    print(f"{v:13s} median HV {np.median(hv):.4f}  median IGD {np.median(gd):.4f}")
