"""QAP instances, lifting, exact energies, rounding and the end-to-end bound computation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lp_solver import LiftedCost, OuterConfig, SolveTrace, dual_lower_bound, solve_lp
from .tensor import GangsterMask, LiftedPoint

# dense lifted arrays are O(n^4); n = 48 is about 42 MB per tensor
MAX_DENSE_N = 48
BRUTE_FORCE_MAX_N = 9
# peak working set of a solve, in float64 lifted tensors (measured ~8)
LIFTED_TENSOR_BUDGET = 16


def memory_budget(n: int) -> int:
    """Documented upper bound, in bytes, on the peak allocation of :func:`solve`."""
    return LIFTED_TENSOR_BUDGET * 8 * n**4


@dataclass
class QapInstance:
    """A QAP in Lawler form (``theta``, ``tau``) or Koopmans-Beckmann form (``A``, ``B``).

    Koopmans-Beckmann instances cost ``sum_ik A[i,k] * B[p(i), p(k)]`` plus an
    optional linear term ``theta[i, p(i)]``.
    """

    n: int
    theta: np.ndarray
    tau: np.ndarray | None = None
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    name: str = ""

    @classmethod
    def lawler(cls, theta, tau, name: str = "") -> "QapInstance":
        theta = np.asarray(theta, dtype=float)
        tau = np.asarray(tau, dtype=float)
        n = theta.shape[0]
        if theta.shape != (n, n) or tau.shape != (n, n, n, n):
            raise ValueError("Lawler instance needs theta (n, n) and tau (n, n, n, n)")
        return cls(n, theta, tau=tau, name=name)

    @classmethod
    def koopmans_beckmann(cls, A, B, theta=None, name: str = "") -> "QapInstance":
        A = np.asarray(A)
        B = np.asarray(B)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape != (n, n):
            raise ValueError("A and B must both be n x n")
        if theta is None:
            # keeps integer instances integer, so energies are exact
            theta = np.zeros((n, n), dtype=np.result_type(A, B))
        return cls(n, np.asarray(theta), A=A, B=B, name=name)

    @property
    def is_kb(self) -> bool:
        return self.A is not None

    def lawler_tau(self) -> np.ndarray:
        if self.tau is not None:
            return self.tau
        return np.einsum("ik,jl->ijkl", self.A.astype(float), self.B.astype(float))


def validate_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm)
    n = perm.size
    if perm.ndim != 1 or not np.issubdtype(perm.dtype, np.integer):
        raise ValueError(f"permutation must be a 1-d integer array, got {perm!r}")
    if not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {perm.tolist()}")
    return perm


def qap_energy(inst: QapInstance, perm) -> float:
    """Exact objective of the assignment ``i -> perm[i]``."""
    p = validate_permutation(perm)
    if p.size != inst.n:
        raise ValueError(f"permutation has length {p.size}, instance has n={inst.n}")
    rows = np.arange(inst.n)
    linear = inst.theta[rows, p].sum()
    if inst.is_kb:
        quad = (inst.A * inst.B[np.ix_(p, p)]).sum()
    else:
        quad = inst.tau[rows[:, None], p[:, None], rows[None, :], p[None, :]].sum()
    total = linear + quad
    return total.item() if hasattr(total, "item") else float(total)


def lift_cost(inst: QapInstance, mask: GangsterMask | None = None) -> LiftedCost:
    if mask is None:
        mask = GangsterMask(inst.n)
    return LiftedCost.from_arrays(inst.theta, inst.lawler_tau(), mask)


def lift_permutation(perm, mask: GangsterMask | None = None) -> LiftedPoint:
    """``x`` = permutation matrix, ``y[i,j,k,l] = x[i,j] * x[k,l]``."""
    p = validate_permutation(perm)
    n = p.size
    if mask is None:
        mask = GangsterMask(n)
    x = np.zeros((n, n))
    x[np.arange(n), p] = 1.0
    return LiftedPoint.from_values(x, np.einsum("ij,kl->ijkl", x, x), mask)


def round_to_permutation(x, rtol: float = 1e-12) -> np.ndarray:
    """Permutation maximizing ``<x, P>``; ties go to the lexicographically smallest.

    Rows are fixed in order to the smallest column that still admits an
    optimal completion.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    rows, cols = linear_sum_assignment(x, maximize=True)
    best = x[rows, cols].sum()
    tol = rtol * max(1.0, abs(best))
    perm = np.empty(n, dtype=int)
    free_rows = list(range(n))
    free_cols = list(range(n))
    fixed = 0.0
    for i in range(n):
        free_rows.remove(i)
        for j in free_cols:
            rest = 0.0
            if free_rows:
                cand_cols = [c for c in free_cols if c != j]
                sub = x[np.ix_(free_rows, cand_cols)]
                r, c = linear_sum_assignment(sub, maximize=True)
                rest = sub[r, c].sum()
            if fixed + x[i, j] + rest >= best - tol:
                perm[i] = j
                fixed += x[i, j]
                free_cols.remove(j)
                break
    return perm


def brute_force(inst: QapInstance, chunk: int = 50_000) -> tuple[np.ndarray, float]:
    """Exhaustive minimum over all ``n!`` permutations; first (lexicographic) minimizer wins."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"oracle limit exceeded: n={n} > {BRUTE_FORCE_MAX_N}")
    rows = np.arange(n)
    if inst.is_kb:
        A = inst.A
        B = inst.B
    else:
        tau = inst.tau
    best_val = math.inf
    best_perm = None
    perms_iter = itertools.permutations(range(n))
    while True:
        block = np.array(list(itertools.islice(perms_iter, chunk)), dtype=int)
        if block.size == 0:
            break
        vals = inst.theta[rows, block].sum(axis=1)
        if inst.is_kb:
            vals = vals + (A[None, :, :] * B[block[:, :, None], block[:, None, :]]).sum(axis=(1, 2))
        else:
            vals = vals + tau[rows[None, :, None], block[:, :, None], rows[None, None, :], block[:, None, :]].sum(axis=(1, 2))
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = vals[k]
            best_perm = block[k].copy()
    # recompute exactly for the winner (integer instances stay integer)
    return best_perm, qap_energy(inst, best_perm)


@dataclass
class BoundsReport:
    """Certified lower bound, upper bound from a rounded permutation, and diagnostics.

    ``relaxation_energy`` is the objective of the last (approximately
    feasible) relaxation iterate; ``lower`` is a certified bound on the JA LP
    value and therefore on the QAP optimum.
    """

    lower: float
    upper: float
    perm: np.ndarray
    relaxation_energy: float
    trace: SolveTrace = field(repr=False)
    name: str = ""
    n: int = 0

    @property
    def normalized_gap(self) -> float:
        return (self.upper - self.lower) / max(1.0, abs(self.upper))

    @property
    def converged(self) -> bool:
        t = self.trace
        return t.stopped_on_tolerance and bool(t.records) and t.records[-1].converged

    def summary(self) -> str:
        t = self.trace
        return "\n".join(
            [
                f"instance        {self.name or '-'} (n={self.n})",
                f"method          {t.method.value}",
                f"lower bound     {self.lower:.10g}",
                f"upper bound     {self.upper:.10g}",
                f"relaxation      {self.relaxation_energy:.10g}",
                f"normalized gap  {self.normalized_gap:.6g}",
                f"raw gap         {self.upper - self.lower:.6g}",
                f"permutation     {' '.join(str(int(v) + 1) for v in self.perm)}",
                f"outer iters     {t.outer_iters} (beta_eff {t.beta_eff:g})",
                f"inner cycles    {t.inner_cycles}",
                f"converged       {'yes' if self.converged else 'no'}",
                f"wall time       {t.wall_time:.3f} s",
            ]
        )


def solve(
    inst: QapInstance,
    cfg: OuterConfig | None = None,
    gangster: bool = True,
    max_n: int = MAX_DENSE_N,
) -> BoundsReport:
    """Lower and upper bounds for ``inst`` from the JA relaxation."""
    cfg = cfg or OuterConfig()
    if inst.n > max_n:
        raise MemoryError(
            f"n={inst.n} exceeds the dense lifted-array budget (max_n={max_n}); raise max_n explicitly"
        )
    mask = GangsterMask(inst.n, gangster)
    cost = lift_cost(inst, mask)
    trace = solve_lp(cost, cfg)
    point = trace.point
    perm = round_to_permutation(point.x)
    upper = qap_energy(inst, perm)
    # the bound is certified for any iterate; fall back to it if tracking was off
    lower = trace.lower
    if not np.isfinite(lower):
        lower = dual_lower_bound(cost, point, trace.beta_eff, perm)
    return BoundsReport(
        lower=lower,
        upper=upper,
        perm=perm,
        relaxation_energy=trace.records[-1].energy,
        trace=trace,
        name=inst.name,
        n=inst.n,
    )
