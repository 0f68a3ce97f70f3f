"""The widened-percentile exponential mechanism.

The output density is proportional to exp(-(epsilon/2) * p_alpha(D, ell)).
Because the score is piecewise constant, the density is too: it is stored as
pieces with log-space weights, integrated exactly, and sampled in two stages
(piece, then uniform position inside the piece).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from . import kernels
from .core import Dataset
from .errors import ConstraintError, DegenerateSupport, UnknownMetric
from .score import PiecewiseConstantFn, WideningParam, p_alpha_many, p_alpha_pieces

Metric = Literal["p", "fair", "swdiff"]
METRICS = ("p", "fair", "swdiff")

# streams of the counter-based generator
_STREAM_PIECE = 0
_STREAM_POSITION = 1


@dataclass(frozen=True)
class MechanismSpec:
    epsilon: float
    alpha: WideningParam

    def __post_init__(self):
        eps = float(self.epsilon)
        if not (np.isfinite(eps) and eps > 0):
            raise ConstraintError(f"epsilon must be positive, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)
        if not isinstance(self.alpha, WideningParam):
            object.__setattr__(self, "alpha", WideningParam(self.alpha))

    @classmethod
    def tuned(cls, n: int, epsilon: float) -> "MechanismSpec":
        """Spec with the widening parameter 1/(n*epsilon), capped at 1."""
        return cls(epsilon, WideningParam(min(1.0, 1.0 / (n * epsilon))))


@dataclass(frozen=True)
class OutputDensity:
    """Normalised output distribution of the mechanism on one dataset."""

    lo: np.ndarray
    hi: np.ndarray
    p_value: np.ndarray
    log_weight: np.ndarray
    log_total_mass: float
    score: PiecewiseConstantFn
    epsilon: float

    @property
    def pieces(self) -> list[tuple[float, float, int, float]]:
        return [
            (float(a), float(b), int(p), float(w))
            for a, b, p, w in zip(self.lo, self.hi, self.p_value, self.log_weight)
        ]

    @cached_property
    def masses(self) -> np.ndarray:
        return np.exp(self.log_weight - self.log_total_mass)

    @cached_property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.masses)
        c /= c[-1]
        return c

    @cached_property
    def heights(self) -> np.ndarray:
        """Density value on each piece."""
        return self.masses / (self.hi - self.lo)

    def log_pdf(self, ell: float) -> float:
        return -0.5 * self.epsilon * self.score(ell) - self.log_total_mass

    def mass_outside(self, left_cut: float, right_cut: float) -> float:
        """Probability of {ell < left_cut} union {ell > right_cut}."""
        left = np.clip(left_cut, self.lo, self.hi) - self.lo
        right = self.hi - np.clip(right_cut, self.lo, self.hi)
        if left_cut > right_cut:
            # overlapping regions: everything is outside
            return 1.0
        return float(min(1.0, np.sum((left + right) * self.heights)))


def _logsumexp(v: np.ndarray) -> float:
    top = float(np.max(v))
    return top + float(np.log(np.sum(np.exp(v - top))))


def build_output_density(d: Dataset, spec: MechanismSpec) -> OutputDensity:
    score = p_alpha_pieces(d, spec.alpha)
    edges = np.asarray(score.edges)
    lo, hi = edges[:-1], edges[1:]
    width = hi - lo
    if not np.any(width > 0):
        raise DegenerateSupport("all pieces of the output density have zero length")
    p = np.asarray(score.values, dtype=np.int64)
    log_weight = np.log(width) - 0.5 * spec.epsilon * p
    return OutputDensity(
        lo=lo,
        hi=hi,
        p_value=p,
        log_weight=log_weight,
        log_total_mass=_logsumexp(log_weight),
        score=score,
        epsilon=spec.epsilon,
    )


def sample_locations(density: OutputDensity, rng_seed: int, trial_indices) -> np.ndarray:
    """One mechanism output per trial index; depends only on (seed, index)."""
    idx = np.asarray(trial_indices, dtype=np.uint64)
    u1 = kernels.uniforms(rng_seed, idx, _STREAM_PIECE)
    u2 = kernels.uniforms(rng_seed, idx, _STREAM_POSITION)
    return kernels.sample_pieces(density.cdf, density.lo, density.hi - density.lo, u1, u2)


def sample_location(density: OutputDensity, rng_seed: int, trial_index: int) -> float:
    return float(sample_locations(density, rng_seed, [trial_index])[0])


def _swdiff_cuts(d: Dataset, threshold: float) -> tuple[float, float]:
    """Locations beyond which SWDIFF exceeds ``threshold``, one per side.

    Moving away from the median, SWDIFF grows linearly with slope
    1 + 2*(number of agents crossed so far).
    """
    t, c, xs = d.median, d.median_rank, d.locations

    def walk(crossings):
        # crossings: distances from the median of agents on this side, ascending
        level, pos, slope = 0.0, 0.0, 1.0
        for dist in crossings:
            nxt = level + slope * (dist - pos)
            if nxt > threshold:
                break
            level, pos, slope = nxt, dist, slope + 2.0
        return pos + (threshold - level) / slope

    right = walk([x - t for x in xs[c:]])
    left = walk([t - x for x in reversed(xs[: c - 1])])
    return t - left, t + right


def exact_tail(d: Dataset, spec: MechanismSpec, metric: Metric, threshold: float,
               density: OutputDensity | None = None) -> float:
    """Pr[metric(D, M(D)) > threshold], computed by exact piecewise integration."""
    if metric not in METRICS:
        raise UnknownMetric(f"unknown metric {metric!r}; expected one of {METRICS}")
    if threshold < 0:
        raise ConstraintError("threshold must be nonnegative")
    dens = density if density is not None else build_output_density(d, spec)
    if metric == "p":
        return float(min(1.0, np.sum(dens.masses[dens.p_value > threshold])))
    if metric == "fair":
        return dens.mass_outside(d.median - threshold, d.median + threshold)
    left, right = _swdiff_cuts(d, threshold)
    return dens.mass_outside(left, right)


def fair_quantile(d: Dataset, spec: MechanismSpec, beta: float,
                  density: OutputDensity | None = None) -> float:
    """Smallest t with Pr[FAIR > t] <= beta."""
    if not 0.0 < beta < 1.0:
        raise ConstraintError(f"beta must lie in (0, 1), got {beta!r}")
    dens = density if density is not None else build_output_density(d, spec)
    t0 = d.median
    edges = np.concatenate((dens.lo, dens.hi[-1:]))
    knots = np.unique(np.concatenate(([0.0], np.abs(edges - t0))))
    tails = np.array([dens.mass_outside(t0 - k, t0 + k) for k in knots])
    below = np.flatnonzero(tails <= beta)
    j = int(below[0])
    if j == 0:
        return 0.0
    # tail is linear between consecutive knots
    k0, k1 = knots[j - 1], knots[j]
    g0, g1 = tails[j - 1], tails[j]
    return float(k0 + (g0 - beta) * (k1 - k0) / (g0 - g1))


def metric_many(d: Dataset, spec: MechanismSpec, metric: Metric, ells) -> np.ndarray:
    """Vectorised metric values at mechanism outputs (used for Monte Carlo)."""
    from .metrics import fair_many, swdiff_many

    if metric == "p":
        return p_alpha_many(d, ells, spec.alpha).astype(np.float64)
    if metric == "fair":
        return fair_many(d, ells)
    if metric == "swdiff":
        return swdiff_many(d, ells)
    raise UnknownMetric(f"unknown metric {metric!r}; expected one of {METRICS}")
