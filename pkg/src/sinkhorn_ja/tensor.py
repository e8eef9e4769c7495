"""Log-domain storage for lifted points (x, y) and the index views used by the solver.

A lifted point holds an ``n x n`` matrix ``x`` and an ``n x n x n x n`` tensor
``y`` indexed ``y[i, j, k, l]``.  Both are kept as natural logarithms; an exact
zero is stored as ``-inf`` and never takes part in a reduction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

NEG_INF = -np.inf

# Axis permutations of y for the three views.  Each is an involution.
DIAMOND_AXES = (2, 3, 0, 1)  # y[i,j,k,l] -> y[k,l,i,j]
TRANSPOSE_AXES = (1, 0, 3, 2)  # y[i,j,k,l] -> y[j,i,l,k]
TRANSPOSE_DIAMOND_AXES = (3, 2, 1, 0)  # (y^T)^diamond[i,j,k,l] -> y[l,k,j,i]


def logsumexp(a: np.ndarray, axis: int, keepdims: bool = False) -> np.ndarray:
    """Stable log(sum(exp(a))) along ``axis``; all ``-inf`` slices give ``-inf``."""
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis)
    return out


@dataclass(frozen=True)
class GangsterMask:
    """Structurally zero lifted entries ``y[i,j,i,l]`` and ``y[j,i,l,i]`` for ``j != l``."""

    n: int
    enabled: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")

    @cached_property
    def array(self) -> np.ndarray:
        """Boolean ``(n, n, n, n)`` array, True where the entry is forced to zero."""
        n = self.n
        m = np.zeros((n, n, n, n), dtype=bool)
        if not self.enabled:
            return m
        i = np.arange(n)[:, None, None, None]
        j = np.arange(n)[None, :, None, None]
        k = np.arange(n)[None, None, :, None]
        l = np.arange(n)[None, None, None, :]
        m |= (i == k) & (j != l)
        m |= (j == l) & (i != k)
        m.setflags(write=False)
        return m

    @property
    def size(self) -> int:
        return int(self.array.sum())

    def indices(self) -> set[tuple[int, int, int, int]]:
        return {tuple(int(v) for v in idx) for idx in np.argwhere(self.array)}


def build_gangster_mask(n: int, enabled: bool = True) -> GangsterMask:
    return GangsterMask(n, enabled)


@dataclass(frozen=True)
class LiftedPoint:
    """A pair (x, y) stored as logarithms, sharing a gangster mask.

    ``log_y`` is ``-inf`` on every masked entry.
    """

    log_x: np.ndarray
    log_y: np.ndarray
    mask: GangsterMask = field(repr=False)

    def __post_init__(self):
        n = self.mask.n
        if self.log_x.shape != (n, n) or self.log_y.shape != (n, n, n, n):
            raise ValueError(
                f"shape mismatch: x {self.log_x.shape}, y {self.log_y.shape} for n={n}"
            )

    @property
    def n(self) -> int:
        return self.mask.n

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.log_x)

    @property
    def y(self) -> np.ndarray:
        return np.exp(self.log_y)

    @classmethod
    def from_values(cls, x, y, mask: GangsterMask | None = None) -> "LiftedPoint":
        """Build from direct-space arrays; zeros become ``-inf`` and the mask is applied."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if mask is None:
            mask = GangsterMask(x.shape[0], enabled=False)
        if np.any(x < 0) or np.any(y < 0):
            raise ValueError("lifted point entries must be nonnegative")
        with np.errstate(divide="ignore"):
            log_x = np.log(x)
            log_y = np.log(y)
        log_y = np.where(mask.array, NEG_INF, log_y)
        return cls(log_x, log_y, mask)

    @classmethod
    def ones(cls, mask: GangsterMask) -> "LiftedPoint":
        n = mask.n
        log_y = np.where(mask.array, NEG_INF, 0.0)
        return cls(np.zeros((n, n)), log_y, mask)

    @classmethod
    def uniform(cls, mask: GangsterMask) -> "LiftedPoint":
        """``x = 1/n``, ``y = 1/n^2`` off the mask."""
        n = mask.n
        log_y = np.where(mask.array, NEG_INF, -2.0 * np.log(n))
        return cls(np.full((n, n), -np.log(n)), log_y, mask)

    def max_abs_diff(self, other: "LiftedPoint") -> float:
        """Max coordinate distance in direct space."""
        dx = np.abs(self.x - other.x).max()
        dy = np.abs(self.y - other.y).max()
        return float(max(dx, dy))


def diamond(log_y: np.ndarray) -> np.ndarray:
    """``out[i,j,k,l] = y[k,l,i,j]`` (a strided view, not a copy)."""
    return log_y.transpose(DIAMOND_AXES)


def transpose_pair(p: LiftedPoint) -> LiftedPoint:
    """``x -> x^T`` and ``y[i,j,k,l] -> y[j,i,l,k]``."""
    return LiftedPoint(p.log_x.T, p.log_y.transpose(TRANSPOSE_AXES), p.mask)


def diamond_point(p: LiftedPoint) -> LiftedPoint:
    return LiftedPoint(p.log_x, diamond(p.log_y), p.mask)


def hadamard_log(a: LiftedPoint, b: LiftedPoint) -> LiftedPoint:
    """Elementwise product of two lifted points, computed as a sum of logs."""
    if a.n != b.n or a.mask.enabled != b.mask.enabled:
        raise ValueError("hadamard_log needs points with matching n and mask")
    log_y = a.log_y + b.log_y
    log_y[a.mask.array] = NEG_INF
    return LiftedPoint(a.log_x + b.log_x, log_y, a.mask)
