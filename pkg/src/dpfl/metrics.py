"""Welfare and fairness losses of placing the facility at a given location.

Every loss compares a proposed location with the welfare-optimal one, which
for an odd number of agents is the unique median. ``fair`` and ``swdiff``
have two routes: the closed forms (default) and the definitional oracles.
"""
from __future__ import annotations

from typing import Literal

import numpy as np

from .core import Dataset

Mode = Literal["closed", "oracle"]


def optimal_location(d: Dataset) -> float:
    return d.median


def social_welfare(d: Dataset, ell: float) -> float:
    ell = d.domain.check(ell)
    return -float(np.sum(np.abs(d.array - ell)))


def loss_vector(d: Dataset, ell: float) -> np.ndarray:
    """Per-agent utility loss of moving the facility from the median to ``ell``."""
    ell = d.domain.check(ell)
    x = d.array
    return np.abs(x - ell) - np.abs(x - d.median)


def fair(d: Dataset, ell: float, mode: Mode = "closed") -> float:
    """Largest individual utility loss."""
    if mode == "closed":
        return abs(d.domain.check(ell) - d.median)
    if mode == "oracle":
        return float(np.max(loss_vector(d, ell)))
    raise ValueError(f"unknown mode {mode!r}")


def crossed_set(d: Dataset, ell: float) -> frozenset[int]:
    """1-based indices of agents passed when moving from the median to ``ell``.

    Intervals are closed, so an agent sitting exactly at ``ell`` or at the
    median (other than the median agent itself) counts as crossed.
    """
    ell = d.domain.check(ell)
    t, c = d.median, d.median_rank
    xs = d.locations
    if ell < t:
        return frozenset(i for i in range(1, c) if ell <= xs[i - 1] <= t)
    if ell > t:
        return frozenset(i for i in range(c + 1, d.n + 1) if t <= xs[i - 1] <= ell)
    return frozenset()


def swdiff(d: Dataset, ell: float, mode: Mode = "closed") -> float:
    """Social welfare lost by placing the facility at ``ell``; always >= 0."""
    ell = d.domain.check(ell)
    if mode == "closed":
        xs = d.locations
        return abs(d.median - ell) + 2.0 * sum(abs(xs[j - 1] - ell) for j in crossed_set(d, ell))
    if mode == "oracle":
        return social_welfare(d, d.median) - social_welfare(d, ell)
    raise ValueError(f"unknown mode {mode!r}")


class _PrefixSums:
    """Vectorised sum_i |x_i - ell| for many ``ell`` using sorted prefix sums."""

    def __init__(self, d: Dataset):
        self.x = d.array
        self.cum = np.concatenate(([0.0], np.cumsum(self.x)))

    def abs_sum(self, ells: np.ndarray) -> np.ndarray:
        n = self.x.size
        k = np.searchsorted(self.x, ells, side="right")
        below = k * ells - self.cum[k]
        above = (self.cum[n] - self.cum[k]) - (n - k) * ells
        return below + above


def fair_many(d: Dataset, ells: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(ells, dtype=np.float64) - d.median)


def swdiff_many(d: Dataset, ells: np.ndarray) -> np.ndarray:
    ps = _PrefixSums(d)
    ells = np.asarray(ells, dtype=np.float64)
    return np.maximum(ps.abs_sum(ells) - ps.abs_sum(np.array([d.median]))[0], 0.0)
