"""Wall time and peak allocation vs n on random Koopmans-Beckmann instances.

    python3 scripts/scalability.py --sizes 10 15 20 25 30
"""
import argparse
import csv
import sys
import time
import tracemalloc

from sinkhorn_ja.cli import random_instance
from sinkhorn_ja.qap import memory_budget, solve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 15, 20, 25, 30])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "seconds", "peak_mib", "budget_mib", "outer_iters", "inner_cycles", "lower", "upper"])
    for n in args.sizes:
        inst = random_instance(n, args.seed)
        tracemalloc.start()
        t0 = time.perf_counter()
        r = solve(inst)
        dt = time.perf_counter() - t0
        peak = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()
        w.writerow([n, f"{dt:.2f}", f"{peak / 2**20:.1f}", f"{memory_budget(n) / 2**20:.1f}",
                    r.trace.outer_iters, r.trace.inner_cycles, f"{r.lower:.6g}", r.upper])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
