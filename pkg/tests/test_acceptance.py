"""End-to-end acceptance checks.  Each test records one PASS/FAIL line, printed
in the terminal summary under "acceptance criteria"."""
import time
import tracemalloc

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from oracles import jap_constraints, kl_projection, olp_constraints
from sinkhorn_ja.cli import random_instance
from sinkhorn_ja.lp_solver import LiftedCost, OuterConfig, solve_lp, solve_regularized
from sinkhorn_ja.projections import JapProjectionConfig, constraint_residuals, project_jap, project_olp
from sinkhorn_ja.qap import brute_force, lift_cost, memory_budget, qap_energy, solve
from sinkhorn_ja.qaplib_io import bundled_instances, data_dir, load_instance, skip_manifest
from sinkhorn_ja.tensor import GangsterMask, LiftedPoint

pytestmark = pytest.mark.acceptance

TIGHT = JapProjectionConfig(eps_inner=1e-11, max_cycles=50000)


@pytest.fixture
def record(acceptance_log):
    def _record(tag, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag} {title}: {detail}"
        acceptance_log.append(line)
        print(line)
        return ok

    return _record


def _flatten(p, vars_):
    return np.array([p.x[v[1:]] if v[0] == "x" else p.y[v[1:]] for v in vars_])


def _random_point(rng, n, mask):
    return LiftedPoint.from_values(rng.uniform(0.05, 3, (n, n)), rng.uniform(0.05, 3, (n,) * 4), mask)


def test_olp_projection_matches_oracle(record):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for case in range(50):
        n = 2 + case % 2
        mask = GangsterMask(n, enabled=False)
        p = _random_point(rng, n, mask)
        vars_, A, b = olp_constraints(n)
        ref = kl_projection(_flatten(p, vars_), A, b)
        worst = max(worst, np.abs(_flatten(project_olp(p), vars_) - ref).max())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 10
    record("C1", "OLP closed form vs Newton oracle", ok,
           f"max coord err {worst:.2e} (tol 1e-8) over 50 cases n=2,3, {dt:.2f} s (limit 10 s)")
    assert ok


def test_jap_projection_matches_oracle(record):
    rng = np.random.default_rng(77)
    n = 2
    mask = GangsterMask(n)
    vars_, A, b = jap_constraints(n, mask.indices())
    worst_err = worst_res = 0.0
    for _ in range(20):
        target = _random_point(rng, n, mask)
        p, stats = project_jap(target, JapProjectionConfig(eps_inner=1e-8, max_cycles=100000))
        ref = kl_projection(_flatten(target, vars_), A, b)
        worst_err = max(worst_err, np.abs(_flatten(p, vars_) - ref).max())
        res = constraint_residuals(p)
        assert set(res) >= {"row", "col", "y_l", "y_k", "y_j", "y_i"}
        worst_res = max(worst_res, max(res.values()))
    ok = worst_err <= 1e-5 and worst_res <= 1e-8
    record("C2", "JA projection vs full-constraint oracle (n=2, gangster)", ok,
           f"max coord err {worst_err:.2e} (tol 1e-5), max residual over six families + mask {worst_res:.2e} (tol 1e-8)")
    assert ok


def _scheme_vs_regularized(method, beta_of_k, k_max, seeds):
    worst = 0.0
    for seed in seeds:
        n = 2 + seed % 2
        rng = np.random.default_rng(seed)
        cost = LiftedCost.from_arrays(rng.normal(size=(n, n)), rng.normal(size=(n,) * 4), GangsterMask(n))
        cfg = OuterConfig(method=method, beta0=0.5, max_outer=k_max, stop_rule="none", inner=TIGHT)
        trace = solve_lp(cost, cfg, keep_iterates=True, track_bound=False)
        for k, v in enumerate(trace.iterates, start=1):
            ref, _ = solve_regularized(cost, beta_of_k(k) * 0.5, inner=TIGHT)
            worst = max(worst, v.max_abs_diff(ref))
    return worst


def test_proximal_equals_regularized_at_k_beta0(record):
    t0 = time.perf_counter()
    worst = _scheme_vs_regularized("proximal", lambda k: k, 5, range(4))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-5 and dt < 60
    record("C3", "proximal iterate k == regularized at beta = k*beta0", ok,
           f"max diff {worst:.2e} (tol 1e-5), k<=5, n=2,3, {dt:.2f} s (limit 60 s)")
    assert ok


def test_accumulation_equals_regularized_at_doubling_beta(record):
    t0 = time.perf_counter()
    worst = _scheme_vs_regularized("accumulation", lambda k: 2 ** (k - 1), 4, range(4))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-5 and dt < 60
    record("C4", "accumulation iterate k == regularized at beta = 2^(k-1)*beta0", ok,
           f"max diff {worst:.2e} (tol 1e-5), k<=4, n=2,3, {dt:.2f} s (limit 60 s)")
    assert ok


def test_sandwich_bounds(record):
    t0 = time.perf_counter()
    violations = []
    worst = -np.inf
    for seed in range(100):
        n = 3 + seed % 5
        inst = random_instance(n, seed, "kb" if seed % 2 == 0 else "lawler")
        report = solve(inst)
        _, opt = brute_force(inst)
        tol = 1e-6 * lift_cost(inst).scale
        slack = max(report.lower - opt, opt - report.upper)
        worst = max(worst, slack / tol)
        if slack > tol:
            violations.append(seed)
    dt = time.perf_counter() - t0
    ok = not violations and dt < 300
    record("C5", "lower <= brute-force optimum <= upper", ok,
           f"100 seeds n=3..7, violations {violations or 'none'}, worst slack/tol {worst:.3g}, "
           f"{dt:.1f} s (limit 300 s)")
    assert ok


def test_linear_assignment_case(record):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        inst = random_instance(8, seed, "linear")
        r, c = linear_sum_assignment(inst.theta)
        opt = inst.theta[r, c].sum()
        report = solve(inst)
        denom = max(1.0, abs(opt))
        worst = max(worst, abs(report.lower - opt) / denom, abs(report.upper - opt) / denom)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-3 and dt < 60
    record("C6", "tau = 0 gives zero gap vs Hungarian optimum", ok,
           f"max relative deviation of lower/upper {worst:.2e} (tol 1e-3), 20 seeds n=8, {dt:.1f} s (limit 60 s)")
    assert ok


QAPLIB_SUBSET = ("lipa20a", "lipa20b", "chr12a", "chr12b", "chr12c")


def test_qaplib_subset(record):
    results = []
    ok = True
    available = set(bundled_instances())
    for name in QAPLIB_SUBSET:
        if name not in available:
            results.append(f"{name} instance file not bundled")
            ok = False
            continue
        problem, sol = load_instance(name)
        report = solve(problem.to_instance())
        opt = sol.value
        rel = (opt - report.lower) / abs(opt)
        fast = report.trace.wall_time <= 15 * 60
        good = rel <= 1e-2 and fast and report.lower <= opt + 1e-6 * abs(opt)
        ok &= good
        results.append(f"{name} (opt-lower)/opt {rel:.2e} upper {report.upper} {report.trace.wall_time:.1f} s")
    record("C7", "QAPLIB subset accuracy (tol 1e-2, 15 min each)", ok, "; ".join(results))
    assert ok, f"not all instances checked under {data_dir()}: {results}"


def test_scalability_n30(record):
    inst = random_instance(30, 0)
    tracemalloc.start()
    t0 = time.perf_counter()
    report = solve(inst)
    dt = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    budget = memory_budget(30)
    ok = dt < 600 and peak <= budget and report.converged and report.lower <= report.upper
    record("C8", "n=30 random instance with defaults", ok,
           f"{dt:.1f} s (limit 600 s), peak {peak / 2**20:.1f} MiB (budget {budget / 2**20:.1f} MiB), "
           f"converged {report.converged}")
    assert ok


def test_extreme_cost_stays_finite(record):
    rng = np.random.default_rng(99)
    n = 5
    theta = 10.0 ** rng.uniform(-6, 6, (n, n))
    tau = 10.0 ** rng.uniform(-6, 6, (n,) * 4)
    mask = GangsterMask(n)
    cost = LiftedCost.from_arrays(theta, tau, mask)
    cfg = OuterConfig(method="accumulation", max_outer=30, stop_rule="none")
    trace = solve_lp(cost, cfg, keep_iterates=True)
    free = ~mask.array
    log_u0_x = np.zeros((n, n))
    log_u0_y = np.zeros((n,) * 4)
    finite = True
    for rec, v in zip(trace.records, trace.iterates):
        finite &= bool(np.isfinite([rec.energy, rec.lower, rec.residual]).all())
        finite &= bool(np.isfinite(v.log_x).all() and np.isfinite(v.log_y[free]).all())
        log_u0_x += v.log_x
        log_u0_y[free] += v.log_y[free]
        finite &= bool(np.isfinite(log_u0_x).all() and np.isfinite(log_u0_y).all())
    ok = finite and trace.outer_iters == 30
    record("C9", "30 accumulation iterations on a 1e-6..1e6 cost stay finite", ok,
           f"{trace.outer_iters} iterations, all energies/bounds/log u0 finite: {finite}")
    assert ok


def test_io_exactness(record):
    skipped = skip_manifest()
    checked, bad = [], []
    for name in bundled_instances():
        problem, sol = load_instance(name)
        if name in skipped:
            continue
        if sol is None:
            bad.append(f"{name} (no .sln)")
            continue
        checked.append(name)
        if qap_energy(problem.to_instance(), sol.perm) != sol.value:
            bad.append(name)
    ok = not bad
    record("C10", "bundled .dat/.sln pairs are exact", ok,
           f"{len(checked)} exact ({', '.join(checked)}), skipped {sorted(skipped) or 'none'}, bad {bad or 'none'}")
    assert ok
