"""
Monte Carlo size and power at desk scale
========================================

Rejection frequencies of the merged CvM and KS tests for a few benchmark
scenarios.  Increase ``M`` and ``B`` for tighter estimates.
"""

from sfplr import TestConfig
from sfplr.simulation import rejection_rate

cfg = TestConfig(num_directions=7, bootstrap_reps=500)
M = 50

###############################################################################
# Size under the null and power against the two deviation levels.

for scenario in (1, 5):
    for d in (0, 1, 2):
        r = rejection_rate(scenario, d, 100, M, cfg, rng_seed=11)
        print(f"S{scenario} d={d}: CvM {r.rejection_rate_cvm:.2f}  KS {r.rejection_rate_ks:.2f}  ({r.elapsed:.1f}s)")

###############################################################################
# Local alternatives shrink the deviation like n^(-1/2).

for n in (50, 200):
    r = rejection_rate(1, "local", n, M, cfg, rng_seed=11)
    print(f"S1 local n={n}: CvM {r.rejection_rate_cvm:.2f}")
