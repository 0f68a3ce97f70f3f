"""Percentile loss and its widened variant.

The widened loss is the score of the private mechanism. It is piecewise
constant in the output location with at most n + 2 pieces, which is what
makes exact integration and exact sampling possible.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Dataset
from .errors import ConstraintError


@dataclass(frozen=True)
class WideningParam:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not 0.0 <= a <= 1.0:
            raise ConstraintError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


def _alpha(alpha: WideningParam | float) -> float:
    return alpha.alpha if isinstance(alpha, WideningParam) else WideningParam(alpha).alpha


@dataclass(frozen=True)
class PiecewiseConstantFn:
    """Integer-valued step function on [edges[0], edges[-1]].

    Pieces left of the zero band ``[peak_lo, peak_hi]`` are closed on the
    left, pieces right of it closed on the right, and the band itself (which
    may be a single point) always evaluates to 0.
    """

    edges: tuple[float, ...]
    values: tuple[int, ...]
    peak_lo: float
    peak_hi: float

    def __post_init__(self):
        if len(self.edges) != len(self.values) + 1:
            raise ValueError("need exactly one more edge than values")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("edges must be strictly increasing")

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(np.asarray(self.edges))

    def __call__(self, ell: float) -> int:
        if self.peak_lo <= ell <= self.peak_hi:
            return 0
        if ell < self.peak_lo:
            i = bisect_right(self.edges, ell) - 1
        else:
            i = bisect_left(self.edges, ell) - 1
        i = min(max(i, 0), len(self.values) - 1)
        return self.values[i]

    def pieces(self):
        """Yield ``(lo, hi, value)`` triples."""
        for k, v in enumerate(self.values):
            yield self.edges[k], self.edges[k + 1], v


def q_value(d: Dataset, a: float) -> int:
    """Percentile loss evaluated straight from its three-case definition."""
    a = d.domain.check(a)
    xs, c, t = d.locations, d.median_rank, d.median
    if xs[0] <= a <= t:
        return min(abs(c - i) for i in range(1, d.n + 1) if xs[i - 1] <= a <= t)
    if t < a <= xs[-1]:
        return min(abs(c - i) for i in range(1, d.n + 1) if t <= a <= xs[i - 1])
    return c


class _Shifted:
    """Agent locations shifted by the window radius; shared by every evaluator."""

    def __init__(self, d: Dataset, alpha: float):
        w = alpha * d.m
        x = d.array
        self.c = d.median_rank
        self.left = x - w
        self.right = x + w
        t = d.median
        self.zero_lo = t - w
        self.zero_hi = t + w

    def __call__(self, ells) -> np.ndarray:
        return kernels.shifted_score(self.left, self.right, self.zero_lo, self.zero_hi, self.c, ells)


def p_alpha_value(d: Dataset, ell: float, alpha: WideningParam | float) -> int:
    """Minimum of the percentile loss over the window of radius alpha*m around ``ell``.

    Since the percentile loss is unimodal with its minimum at the median, the
    minimum is attained at the projection of the median onto the window; the
    comparison is done against shifted agent locations so that the result
    agrees bit-for-bit with :func:`p_alpha_pieces`.
    """
    ell = d.domain.check(ell)
    return int(_Shifted(d, _alpha(alpha))(np.array([ell]))[0])


def p_alpha_many(d: Dataset, ells, alpha: WideningParam | float) -> np.ndarray:
    """Vectorised :func:`p_alpha_value` (no domain check)."""
    return _Shifted(d, _alpha(alpha))(ells)


def p_alpha_pieces(d: Dataset, alpha: WideningParam | float) -> PiecewiseConstantFn:
    a = _alpha(alpha)
    sh = _Shifted(d, a)
    lo, hi = d.domain.lo, d.domain.hi
    cand = np.concatenate(([lo, hi, sh.zero_lo, sh.zero_hi], sh.left, sh.right))
    cand = np.unique(np.clip(cand, lo, hi))
    if cand.size < 2:
        cand = np.array([lo, hi])
    zlo, zhi = max(sh.zero_lo, lo), min(sh.zero_hi, hi)
    # evaluate each piece at its closed end so boundaries match the point evaluator
    left_end, right_end = cand[:-1], cand[1:]
    anchor = np.where(right_end <= zlo, left_end, np.where(left_end >= zhi, right_end, 0.5 * (left_end + right_end)))
    values = sh(anchor)
    # merge neighbours with equal values
    keep = np.concatenate(([True], values[1:] != values[:-1]))
    starts = np.flatnonzero(keep)
    edges = np.concatenate((cand[starts], [cand[-1]]))
    return PiecewiseConstantFn(
        edges=tuple(float(e) for e in edges),
        values=tuple(int(v) for v in values[starts]),
        peak_lo=float(sh.zero_lo),
        peak_hi=float(sh.zero_hi),
    )
