"""Approximate LP solutions over the JA polytope from repeated KL projections.

Three outer schemes are available:

* ``regularization``: one projection of ``u0 * exp(-beta c)``.
* ``proximal``: ``v[k+1] = proj(v[k] * exp(-beta0 c))``; the effective
  inverse temperature grows linearly in ``k``.
* ``accumulation``: ``u0 = v[k] * ... * v[0]`` before each projection; the
  effective inverse temperature doubles every step.  ``accumulation_square``
  uses ``u0 = v[k] * v[k]`` instead.

Every Bregman iterate has the exact form ``log v = -beta_eff * c + A^T lam``
(with ``u0 = 1``), so ``-log(v) / beta_eff`` is a vector of reduced costs for
some dual vector.  :func:`dual_lower_bound` turns that into a certified lower
bound on the LP value, independent of how well the inner loop converged.
"""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .projections import JapProjectionConfig, ProjectionStats, project_jap
from .tensor import GangsterMask, LiftedPoint

log = logging.getLogger(__name__)


class Method(str, enum.Enum):
    REGULARIZATION = "regularization"
    PROXIMAL = "proximal"
    ACCUMULATION = "accumulation"
    ACCUMULATION_SQUARE = "accumulation_square"


@dataclass(frozen=True)
class LiftedCost:
    """Linear cost over lifted points, scaled so that ``max |c| == 1``.

    ``c_y`` is zero on masked entries; those entries never enter an inner product.
    """

    c_x: np.ndarray
    c_y: np.ndarray
    mask: GangsterMask = field(repr=False)
    scale: float = 1.0

    @classmethod
    def from_arrays(cls, theta, tau, mask: GangsterMask | None = None) -> "LiftedCost":
        theta = np.asarray(theta, dtype=float)
        tau = np.asarray(tau, dtype=float)
        n = theta.shape[0]
        if mask is None:
            mask = GangsterMask(n, enabled=False)
        if theta.shape != (n, n) or tau.shape != (n, n, n, n) or mask.n != n:
            raise ValueError("cost shapes do not match")
        tau = np.where(mask.array, 0.0, tau)
        scale = max(np.abs(theta).max(), np.abs(tau).max())
        if scale == 0:
            scale = 1.0
        return cls(theta / scale, tau / scale, mask, float(scale))

    @property
    def n(self) -> int:
        return self.mask.n


def energy(cost: LiftedCost, p: LiftedPoint, normalized: bool = False) -> float:
    """``sum theta x + sum tau y`` over unmasked coordinates."""
    if p.n != cost.n:
        raise ValueError(f"point has n={p.n}, cost has n={cost.n}")
    # c_y is zero on the mask and y is exactly zero there too
    e = float(np.sum(cost.c_x * p.x) + np.sum(cost.c_y * p.y))
    return e if normalized else e * cost.scale


@dataclass(frozen=True)
class OuterConfig:
    method: Method = Method.ACCUMULATION
    beta0: float = 1.0
    eps_outer: float = 1e-2
    max_outer: int = 50
    inner: JapProjectionConfig = field(default_factory=JapProjectionConfig)
    # "energy_gap": relative energy change and relative (energy - certified bound) both < eps_outer
    # "energy": relative energy change only; "none": always run max_outer iterations
    stop_rule: str = "energy_gap"

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.beta0 > 0:
            raise ValueError("beta0 must be positive")
        if not self.eps_outer > 0:
            raise ValueError("eps_outer must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.stop_rule not in ("energy_gap", "energy", "none"):
            raise ValueError(f"unknown stop_rule {self.stop_rule!r}")


@dataclass
class OuterRecord:
    energy: float
    lower: float
    beta_eff: float
    inner_cycles: int
    residual: float
    converged: bool


@dataclass
class SolveTrace:
    method: Method
    records: list[OuterRecord] = field(default_factory=list)
    point: LiftedPoint | None = None
    iterates: list[LiftedPoint] = field(default_factory=list)
    stopped_on_tolerance: bool = False
    wall_time: float = 0.0

    @property
    def outer_iters(self) -> int:
        return len(self.records)

    @property
    def inner_cycles(self) -> int:
        return sum(r.inner_cycles for r in self.records)

    @property
    def energies(self) -> list[float]:
        return [r.energy for r in self.records]

    @property
    def lower(self) -> float:
        """Best certified lower bound over all outer iterations (``-inf`` if none tracked)."""
        return max((r.lower for r in self.records), default=-np.inf)

    @property
    def beta_eff(self) -> float:
        return self.records[-1].beta_eff if self.records else 0.0

    @property
    def inner_converged(self) -> bool:
        return all(r.converged for r in self.records)


def regularized_target(cost: LiftedCost, beta: float, u0: LiftedPoint) -> LiftedPoint:
    """``u0 * exp(-beta c)`` built in log space."""
    log_y = u0.log_y - beta * cost.c_y
    log_y[cost.mask.array] = -np.inf
    return LiftedPoint(u0.log_x - beta * cost.c_x, log_y, u0.mask)


def solve_regularized(
    cost: LiftedCost,
    beta: float,
    u0: LiftedPoint | None = None,
    inner: JapProjectionConfig | None = None,
) -> tuple[LiftedPoint, ProjectionStats]:
    """KL projection of ``u0 * exp(-beta c)`` onto the JA polytope."""
    if u0 is None:
        u0 = LiftedPoint.ones(cost.mask)
    return project_jap(regularized_target(cost, beta, u0), inner)


def _run_outer(
    cost: LiftedCost, cfg: OuterConfig, keep_iterates: bool, track_bound: bool = True
) -> SolveTrace:
    trace = SolveTrace(cfg.method)
    t0 = time.perf_counter()
    u0 = LiftedPoint.ones(cost.mask)
    # u0 == exp(-beta_u0 * c + A^T lam) for some lam
    beta_u0 = 0.0
    prev_energy = None
    best_lower = -np.inf
    for k in range(1, cfg.max_outer + 1):
        v, stats = solve_regularized(cost, cfg.beta0, u0, cfg.inner)
        beta_v = beta_u0 + cfg.beta0
        e = energy(cost, v, normalized=True)
        lower = dual_lower_bound(cost, v, beta_v) if track_bound else -np.inf
        best_lower = max(best_lower, lower)
        trace.records.append(
            OuterRecord(e * cost.scale, lower, beta_v, stats.cycles_used, stats.final_residual, stats.converged)
        )
        trace.point = v
        if keep_iterates:
            trace.iterates.append(v)
        if not stats.converged:
            log.warning("outer %d: inner loop stopped at residual %.3g", k, stats.final_residual)
        log.info(
            "outer %d: energy %.6g lower %.6g beta_eff %g cycles %d",
            k, e * cost.scale, best_lower, beta_v, stats.cycles_used,
        )

        if prev_energy is not None and cfg.stop_rule != "none":
            denom = max(1.0, abs(prev_energy))
            settled = abs(e - prev_energy) / denom < cfg.eps_outer
            if cfg.stop_rule == "energy_gap":
                settled = settled and abs(e - best_lower / cost.scale) / denom < cfg.eps_outer
            if settled:
                trace.stopped_on_tolerance = True
                break
        prev_energy = e

        if cfg.method is Method.PROXIMAL:
            u0, beta_u0 = v, beta_v
        elif cfg.method is Method.ACCUMULATION:
            u0 = LiftedPoint(u0.log_x + v.log_x, u0.log_y + v.log_y, cost.mask)
            beta_u0 += beta_v
        elif cfg.method is Method.ACCUMULATION_SQUARE:
            u0 = LiftedPoint(2.0 * v.log_x, 2.0 * v.log_y, cost.mask)
            beta_u0 = 2.0 * beta_v
        else:
            # regularization is a single projection
            trace.stopped_on_tolerance = True
            break
    trace.wall_time = time.perf_counter() - t0
    return trace


def solve_proximal(cost: LiftedCost, cfg: OuterConfig, keep_iterates: bool = False) -> SolveTrace:
    if cfg.method is not Method.PROXIMAL:
        raise ValueError(f"solve_proximal called with method={cfg.method.value}")
    return _run_outer(cost, cfg, keep_iterates, cfg.stop_rule == "energy_gap")


def solve_accumulation(cost: LiftedCost, cfg: OuterConfig, keep_iterates: bool = False) -> SolveTrace:
    if cfg.method not in (Method.ACCUMULATION, Method.ACCUMULATION_SQUARE):
        raise ValueError(f"solve_accumulation called with method={cfg.method.value}")
    return _run_outer(cost, cfg, keep_iterates, cfg.stop_rule == "energy_gap")


def solve_lp(
    cost: LiftedCost, cfg: OuterConfig, keep_iterates: bool = False, track_bound: bool = True
) -> SolveTrace:
    """Run the outer scheme named by ``cfg.method``.

    With ``track_bound`` the certified lower bound is evaluated after every
    outer iteration (``n^2`` small assignment problems).
    """
    return _run_outer(cost, cfg, keep_iterates, track_bound or cfg.stop_rule == "energy_gap")


def effective_beta(method: Method | str, beta0: float, k: int) -> float:
    """Inverse temperature reached after ``k`` outer iterations from ``u0 = 1``."""
    method = Method(method)
    if method is Method.REGULARIZATION:
        return beta0
    if method is Method.PROXIMAL:
        return k * beta0
    if method is Method.ACCUMULATION:
        return 2 ** (k - 1) * beta0
    return (2**k - 1) * beta0


def _assignment_value(cost: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def relaxed_minimum(r_x: np.ndarray, r_y: np.ndarray, mask: GangsterMask) -> float:
    """Min of ``r . v`` over the set cut out by the x-marginals and the y[i,j]-block marginals.

    Each block ``y[i,j]`` is ``x[i,j]`` times a doubly stochastic matrix, so the
    minimum is an assignment problem over ``(i, j)`` of per-block assignment
    values.
    """
    n = mask.n
    block = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            r = r_y[i, j]
            if mask.enabled:
                # row i and column j of the block are pinned to the (i, j) entry
                rest = np.delete(np.delete(r, i, axis=0), j, axis=1)
                block[i, j] = r[i, j] + (_assignment_value(rest) if n > 1 else 0.0)
            else:
                block[i, j] = _assignment_value(r)
    return _assignment_value(r_x + block)


def dual_lower_bound(
    cost: LiftedCost, p: LiftedPoint, beta_eff: float, perm: np.ndarray | None = None
) -> float:
    """Certified lower bound on the JA LP value from a Bregman iterate.

    ``p`` must come from projections of ``exp(-beta_eff c)`` (times factors
    ``exp(A^T lam)``), which holds for every iterate of the outer schemes.
    ``perm`` is any permutation; the bound does not depend on it in exact
    arithmetic.
    """
    n = cost.n
    if perm is None:
        perm = np.arange(n)
    r_x = -p.log_x / beta_eff
    r_y = np.where(cost.mask.array, 0.0, -p.log_y / beta_eff)
    # c.P - r.P == b^T mu for every feasible P
    rows = np.arange(n)
    cols = np.asarray(perm)
    cp = cost.c_x[rows, cols].sum() + cost.c_y[rows[:, None], cols[:, None], rows[None, :], cols[None, :]].sum()
    rp = r_x[rows, cols].sum() + r_y[rows[:, None], cols[:, None], rows[None, :], cols[None, :]].sum()
    bound = cp - rp + relaxed_minimum(r_x, r_y, cost.mask)
    return float(bound * cost.scale)
