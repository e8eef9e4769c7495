"""Command line entry point: ``sinkhorn-ja {solve,bench,oracle-check,compare-methods}``.

Exit codes: 0 success, 1 input error, 2 non-convergence (the report is still printed).
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import sys
import time
from dataclasses import dataclass

import numpy as np

from .lp_solver import (
    LiftedCost,
    Method,
    OuterConfig,
    effective_beta,
    solve_lp,
    solve_regularized,
)
from .projections import JapProjectionConfig
from .qap import BRUTE_FORCE_MAX_N, QapInstance, brute_force, lift_cost, solve
from .qaplib_io import QaplibFormatError, ResultRow, load_instance, write_csv
from .tensor import GangsterMask

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2

DISTRIBUTIONS = ("kb", "lawler", "linear")

log = logging.getLogger("sinkhorn_ja")


def random_instance(n: int, seed: int, distribution: str = "kb") -> QapInstance:
    """Seeded random instance.

    ``kb``: symmetric flow and distance matrices with integer entries in
    [0, 99] and zero diagonal.  ``lawler``: integer ``theta`` and ``tau`` in
    [0, 99].  ``linear``: integer ``theta`` in [0, 99] and ``tau = 0``.
    """
    rng = np.random.default_rng(seed)
    name = f"random-{distribution}-n{n}-s{seed}"
    if distribution == "kb":

        def sym():
            M = np.triu(rng.integers(0, 100, size=(n, n)), 1)
            return M + M.T

        return QapInstance.koopmans_beckmann(sym(), sym(), name=name)
    if distribution == "lawler":
        theta = rng.integers(0, 100, size=(n, n)).astype(float)
        tau = rng.integers(0, 100, size=(n, n, n, n)).astype(float)
        return QapInstance.lawler(theta, tau, name=name)
    if distribution == "linear":
        theta = rng.integers(0, 100, size=(n, n)).astype(float)
        return QapInstance.lawler(theta, np.zeros((n, n, n, n)), name=name)
    raise ValueError(f"unknown distribution {distribution!r}")


def _method(s: str) -> Method:
    return Method(s.replace("-", "_"))


def outer_config(args) -> OuterConfig:
    return OuterConfig(
        method=_method(args.method),
        beta0=args.beta0,
        eps_outer=args.eps,
        max_outer=args.max_outer,
        inner=JapProjectionConfig(
            eps_inner=args.eps if args.eps_inner is None else args.eps_inner,
            max_cycles=args.max_cycles,
        ),
    )


def _row(report, method: str, bk_lower=None, bk_upper=None) -> ResultRow:
    t = report.trace
    return ResultRow(
        instance=report.name,
        n=report.n,
        method=method,
        lower=report.lower,
        upper=report.upper,
        bk_lower=bk_lower,
        bk_upper=bk_upper,
        gap=report.normalized_gap,
        outer_iters=t.outer_iters,
        inner_cycles=t.inner_cycles,
        wall_ms=round(t.wall_time * 1000.0, 3),
    )


def _load(args) -> tuple[QapInstance, float | None]:
    """Instance from a path/name, or a random one from ``--n``/``--seed``."""
    if args.instance:
        problem, sol = load_instance(args.instance)
        return problem.to_instance(), (sol.value if sol else None)
    if args.n is None:
        raise ValueError("give an instance path/name or --n for a random instance")
    return random_instance(args.n, args.seed, args.dist), None


@contextlib.contextmanager
def _threads(n: int | None):
    if n is None:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=n):
        yield


def cmd_solve(args) -> int:
    try:
        inst, best_known = _load(args)
    except (OSError, ValueError, QaplibFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = solve(inst, outer_config(args), gangster=not args.no_gangster)
    print(report.summary())
    if best_known is not None:
        print(f"best known      {best_known:.10g}")
        print(f"gap vs best     {(best_known - report.lower) / max(1.0, abs(best_known)):.6g}")
    if args.out:
        write_csv([_row(report, args.method, best_known, best_known)], args.out)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_bench(args) -> int:
    names = list(args.instances)
    if args.n is not None:
        names += [None] * args.count
    if not names:
        print("error: bench needs at least one instance", file=sys.stderr)
        return EXIT_INPUT
    cfg = outer_config(args)
    rows = []
    for idx, name in enumerate(names):
        t0 = time.perf_counter()
        try:
            if name is None:
                inst, bk = random_instance(args.n, args.seed + idx - len(args.instances), args.dist), None
            else:
                problem, sol = load_instance(name)
                inst, bk = problem.to_instance(), (sol.value if sol else None)
            report = solve(inst, cfg, gangster=not args.no_gangster)
            rows.append(_row(report, args.method, bk, bk))
            log.info("%s: lower %.6g upper %.6g", report.name, report.lower, report.upper)
        except Exception as exc:  # one bad instance must not sink the sweep
            log.error("%s failed: %s", name, exc)
            rows.append(
                ResultRow(str(name), 0, args.method, float("nan"), float("nan"), None, None,
                          float("nan"), 0, 0, round((time.perf_counter() - t0) * 1000.0, 3))
            )
    write_csv(rows, args.out if args.out else sys.stdout)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.n is None:
        print("error: oracle-check needs --n", file=sys.stderr)
        return EXIT_INPUT
    if args.n > BRUTE_FORCE_MAX_N:
        print(f"error: oracle limit exceeded (n={args.n} > {BRUTE_FORCE_MAX_N})", file=sys.stderr)
        return EXIT_INPUT
    cfg = outer_config(args)
    failures = 0
    for seed in range(args.seed, args.seed + args.count):
        inst = random_instance(args.n, seed, args.dist)
        report = solve(inst, cfg, gangster=not args.no_gangster)
        _, opt = brute_force(inst)
        tol = 1e-6 * lift_cost(inst, GangsterMask(inst.n, not args.no_gangster)).scale
        ok = report.lower <= opt + tol and opt <= report.upper + tol
        status = "ok" if ok else "VIOLATION"
        print(
            f"seed {seed}: lower {report.lower:.10g} opt {opt:.10g} upper {report.upper:.10g} "
            f"gap {report.normalized_gap:.3g} {status}"
        )
        failures += not ok
    print(f"{args.count - failures}/{args.count} seeds satisfy lower <= opt <= upper")
    return EXIT_OK if failures == 0 else EXIT_INPUT


@dataclass
class MethodComparison:
    k: int
    proximal_beta: float
    proximal_dist: float
    accumulation_beta: float
    accumulation_dist: float
    square_beta: float
    square_dist: float
    square_dist_doubling: float


def compare_methods(cost: LiftedCost, beta0: float, k_max: int, inner: JapProjectionConfig):
    """Distances between outer iterates and one-shot regularized solutions, per ``k``."""
    traces = {}
    for m in (Method.PROXIMAL, Method.ACCUMULATION, Method.ACCUMULATION_SQUARE):
        cfg = OuterConfig(method=m, beta0=beta0, max_outer=k_max, inner=inner, stop_rule="none")
        traces[m] = solve_lp(cost, cfg, keep_iterates=True, track_bound=False)
    cache = {}

    def reference(beta):
        if beta not in cache:
            cache[beta] = solve_regularized(cost, beta, None, inner)[0]
        return cache[beta]

    out = []
    for k in range(1, k_max + 1):
        bp = effective_beta(Method.PROXIMAL, beta0, k)
        ba = effective_beta(Method.ACCUMULATION, beta0, k)
        bs = effective_beta(Method.ACCUMULATION_SQUARE, beta0, k)
        sq = traces[Method.ACCUMULATION_SQUARE].iterates[k - 1]
        out.append(
            MethodComparison(
                k,
                bp,
                traces[Method.PROXIMAL].iterates[k - 1].max_abs_diff(reference(bp)),
                ba,
                traces[Method.ACCUMULATION].iterates[k - 1].max_abs_diff(reference(ba)),
                bs,
                sq.max_abs_diff(reference(bs)),
                sq.max_abs_diff(reference(ba)),
            )
        )
    return out


def cmd_compare_methods(args) -> int:
    if args.instance:
        try:
            inst, _ = _load(args)
        except (OSError, ValueError, QaplibFormatError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        inst = random_instance(args.n or 2, args.seed, args.dist)
    if inst.n > 4:
        print("error: compare-methods is limited to n <= 4", file=sys.stderr)
        return EXIT_INPUT
    cost = LiftedCost.from_arrays(inst.theta, inst.lawler_tau(), GangsterMask(inst.n, not args.no_gangster))
    inner = JapProjectionConfig(
        eps_inner=args.eps_inner if args.eps_inner is not None else 1e-10,
        max_cycles=max(args.max_cycles, 20000),
    )
    rows = compare_methods(cost, args.beta0, args.k_max, inner)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([
            "k", "proximal_beta", "proximal_dist", "accumulation_beta", "accumulation_dist",
            "square_beta", "square_dist", "square_dist_vs_doubling",
        ])
        for r in rows:
            w.writerow([r.k, f"{r.proximal_beta:g}", f"{r.proximal_dist:.3e}", f"{r.accumulation_beta:g}",
                        f"{r.accumulation_dist:.3e}", f"{r.square_beta:g}", f"{r.square_dist:.3e}",
                        f"{r.square_dist_doubling:.3e}"])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _common(p: argparse.ArgumentParser, beta0: float = 1.0) -> None:
    p.add_argument("--method", default="accumulation",
                   choices=["regularization", "proximal", "accumulation", "accumulation-square"])
    p.add_argument("--beta0", type=float, default=beta0)
    p.add_argument("--eps", type=float, default=1e-2, help="outer tolerance (and inner, unless --eps-inner)")
    p.add_argument("--eps-inner", type=float, default=None)
    p.add_argument("--max-outer", type=int, default=50)
    p.add_argument("--max-cycles", type=int, default=1000)
    p.add_argument("--no-gangster", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="random instance size")
    p.add_argument("--dist", choices=DISTRIBUTIONS, default="kb", help="random instance distribution")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sinkhorn-ja", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="bounds for one instance")
    p.add_argument("instance", nargs="?", help=".dat path or bundled instance name")
    _common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="CSV of results over several instances")
    p.add_argument("instances", nargs="*")
    p.add_argument("--count", type=int, default=5, help="random instances when --n is given")
    _common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle-check", help="lower <= brute force <= upper on random instances")
    p.add_argument("--count", type=int, default=20)
    _common(p)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("compare-methods", help="per-k distances of outer iterates to regularized solutions")
    p.add_argument("instance", nargs="?")
    p.add_argument("--k-max", type=int, default=4)
    _common(p, beta0=0.5)
    p.set_defaults(func=cmd_compare_methods)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    with _threads(args.threads):
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
