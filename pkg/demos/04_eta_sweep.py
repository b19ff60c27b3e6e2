"""
Slower perturbations, weaker superarrivals
==========================================

Stretch the duration of the width increase and watch the superarrivality
measure eta fall towards the adiabatic limit. Each point is a reference and a
perturbed propagation, so this takes several minutes at full resolution.
"""

from superarrivals import RunConfig, sweep

result = sweep(RunConfig(), "epsilon", [0.27, 0.4, 0.6, 0.8])
for point in result.points:
    r = point.report
    print(f"epsilon = {point.value:.2f} t0   eta = {r.eta:.3f}   window {r.delta_t:.2f} t0   "
          f"T_p = {point.T_perturbed:.4f}")
