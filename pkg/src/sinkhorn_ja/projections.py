"""Closed-form KL projections and the alternating Bregman loop onto the JA polytope.

The JA polytope is the intersection of four coordinate-permuted copies of the
one-sided local polytope (OLP)::

    sum_j x[i,j] = 1            for all i
    sum_l y[i,j,k,l] = x[i,j]   for all i, j, k

Each copy has a closed-form KL projection, so the projection onto the
intersection is computed by cycling through the four copies.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .tensor import (
    DIAMOND_AXES,
    TRANSPOSE_AXES,
    TRANSPOSE_DIAMOND_AXES,
    LiftedPoint,
    logsumexp,
)


class Variant(str, enum.Enum):
    PLAIN = "plain"
    DIAMOND = "diamond"
    TRANSPOSE = "transpose"
    TRANSPOSE_DIAMOND = "transpose_diamond"


# (transpose x?, axis permutation of y) for each view
_VIEWS = {
    Variant.PLAIN: (False, None),
    Variant.DIAMOND: (False, DIAMOND_AXES),
    Variant.TRANSPOSE: (True, TRANSPOSE_AXES),
    Variant.TRANSPOSE_DIAMOND: (True, TRANSPOSE_DIAMOND_AXES),
}

DEFAULT_CYCLE = (
    Variant.PLAIN,
    Variant.DIAMOND,
    Variant.TRANSPOSE,
    Variant.TRANSPOSE_DIAMOND,
)


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class JapProjectionConfig:
    eps_inner: float = 1e-2
    max_cycles: int = 1000
    cycle_order: tuple[Variant, ...] = DEFAULT_CYCLE

    def __post_init__(self):
        if not self.eps_inner > 0:
            raise ValueError("eps_inner must be positive")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        order = tuple(Variant(v) for v in self.cycle_order)
        if sorted(order) != sorted(DEFAULT_CYCLE):
            raise ValueError(f"cycle_order must be a permutation of {list(DEFAULT_CYCLE)}")
        object.__setattr__(self, "cycle_order", order)


@dataclass(frozen=True)
class ProjectionStats:
    cycles_used: int
    final_residual: float
    converged: bool


def project_row_stochastic(z: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """KL projection of a positive matrix onto matrices with row sums ``mu``."""
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(z <= 0) or np.any(mu <= 0):
        raise ProjectionError("row-stochastic projection needs strictly positive inputs")
    return z / z.sum(axis=1, keepdims=True) * mu[:, None]


def kl_divergence(x, z) -> float:
    """``sum x * (log(x / z) - 1)``, with ``0 log 0 = 0``."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(x > 0, x * (np.log(x) - np.log(z) - 1.0), 0.0)
    return float(terms.sum())


def kl_geometric_merge(weights, targets) -> tuple[float, float]:
    """Collapse ``sum_k a_k KL(x|b_k)`` into a single ``A * KL(x|b)``.

    Returns ``(A, b)`` with ``A = sum a_k`` and ``b`` the ``a``-weighted
    geometric mean of the ``b_k``.
    """
    a = np.asarray(weights, dtype=float).ravel()
    b = np.asarray(targets, dtype=float).ravel()
    if a.size == 0 or a.size != b.size:
        raise ValueError("need matching, nonempty weights and targets")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("weights and targets must be strictly positive")
    total = float(a.sum())
    return total, float(np.exp(np.dot(a, np.log(b)) / total))


def project_olp_log(log_z: np.ndarray, log_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """KL projection of (z, w) onto the OLP, everything in log space.

    Masked entries of ``w`` are ``-inf`` and stay ``-inf`` in the result.
    """
    n = log_z.shape[0]
    # log sum_s w[i,j,k,s]
    row_lse = logsumexp(log_w, axis=3)
    if np.isneginf(row_lse).any():
        raise ProjectionError("a (i, j, k) row of w is entirely masked")
    log_q = (row_lse.sum(axis=2) + log_z) / (n + 1)
    log_x = log_q - logsumexp(log_q, axis=1, keepdims=True)
    log_y = log_w - row_lse[..., None]
    log_y += log_x[:, :, None, None]
    return log_x, log_y


def project_olp(p: LiftedPoint) -> LiftedPoint:
    """KL projection of the point ``(z, w)`` onto the one-sided local polytope."""
    log_x, log_y = project_olp_log(p.log_x, p.log_y)
    return LiftedPoint(log_x, log_y, p.mask)


def project_olp_variant(p: LiftedPoint, variant: Variant | str) -> LiftedPoint:
    """Project onto one of the four OLP copies by conjugating with its view."""
    flip_x, axes = _VIEWS[Variant(variant)]
    log_z = p.log_x.T if flip_x else p.log_x
    log_w = p.log_y if axes is None else p.log_y.transpose(axes)
    log_x, log_y = project_olp_log(log_z, log_w)
    if flip_x:
        log_x = log_x.T
    if axes is not None:
        log_y = log_y.transpose(axes)
    return LiftedPoint(np.ascontiguousarray(log_x), np.ascontiguousarray(log_y), p.mask)


def constraint_residuals(p: LiftedPoint) -> dict[str, float]:
    """Max absolute violation of each JA constraint family, plus the mask."""
    x = p.x
    y = p.y
    res = {
        "row": np.abs(x.sum(axis=1) - 1.0).max(),
        "col": np.abs(x.sum(axis=0) - 1.0).max(),
        "y_l": np.abs(y.sum(axis=3) - x[:, :, None]).max(),
        "y_k": np.abs(y.sum(axis=2) - x[:, :, None]).max(),
        "y_j": np.abs(y.sum(axis=1) - x[None, :, :]).max(),
        "y_i": np.abs(y.sum(axis=0) - x[None, :, :]).max(),
        "mask": np.abs(y[p.mask.array]).max(initial=0.0),
    }
    return {k: float(v) for k, v in res.items()}


def jap_residual(p: LiftedPoint) -> float:
    return max(constraint_residuals(p).values())


def project_jap(
    target: LiftedPoint, cfg: JapProjectionConfig | None = None
) -> tuple[LiftedPoint, ProjectionStats]:
    """Bregman iterations over the four OLP copies until every JA constraint holds to ``eps_inner``."""
    cfg = cfg or JapProjectionConfig()
    if target.n == 1:
        one = LiftedPoint(np.zeros((1, 1)), np.zeros((1, 1, 1, 1)), target.mask)
        return one, ProjectionStats(0, 0.0, True)
    p = target
    residual = np.inf
    cycles = 0
    for cycles in range(1, cfg.max_cycles + 1):
        for variant in cfg.cycle_order:
            p = project_olp_variant(p, variant)
        residual = jap_residual(p)
        if not np.isfinite(residual):
            break
        if residual <= cfg.eps_inner:
            return p, ProjectionStats(cycles, residual, True)
    return p, ProjectionStats(cycles, float(residual), False)
