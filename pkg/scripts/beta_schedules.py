"""Distance of each outer scheme's k-th iterate to the one-shot regularized
solution at its effective beta, averaged over a few random n=3 costs.

The squared-accumulation column is also compared against the doubling
schedule 2^(k-1) beta0, which it does not follow.
"""
import numpy as np

from sinkhorn_ja.cli import compare_methods
from sinkhorn_ja.lp_solver import LiftedCost
from sinkhorn_ja.projections import JapProjectionConfig
from sinkhorn_ja.tensor import GangsterMask

inner = JapProjectionConfig(eps_inner=1e-11, max_cycles=50000)
k_max = 5
table = np.zeros((k_max, 4))
seeds = range(5)
for seed in seeds:
    rng = np.random.default_rng(seed)
    cost = LiftedCost.from_arrays(rng.normal(size=(3, 3)), rng.normal(size=(3,) * 4), GangsterMask(3))
    for r in compare_methods(cost, 0.5, k_max, inner):
        table[r.k - 1] = np.maximum(
            table[r.k - 1], [r.proximal_dist, r.accumulation_dist, r.square_dist, r.square_dist_doubling]
        )

print(f"{'k':>2} {'prox beta':>9} {'dist':>9} {'acc beta':>9} {'dist':>9} {'sq beta':>8} {'dist':>9} {'vs 2^(k-1)':>10}")
for k in range(1, k_max + 1):
    d = table[k - 1]
    print(f"{k:2d} {0.5 * k:9g} {d[0]:9.1e} {0.5 * 2 ** (k - 1):9g} {d[1]:9.1e} "
          f"{0.5 * (2**k - 1):8g} {d[2]:9.1e} {d[3]:10.1e}")
