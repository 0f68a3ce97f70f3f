"""Dataset families, certificates, and the adversarial dataset generators.

Membership in the collapsing family (CTM) is decided directly. Membership in
SPM_lambda (within K-S distance lambda of a density single-peaked at its own
median) is only ever *certified*: the caller supplies a piecewise-constant
density and we check it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .core import Dataset, format_float, load_dataset
from .errors import DataError, DomainMismatch, InvalidCertificate, InvalidParams, NotCTM, ZeroGap

GAP_TOL = 1e-12
CERT_TOL = 1e-9


def is_ctm(d: Dataset, tol: float = GAP_TOL) -> bool:
    """True iff gaps shrink (weakly) towards the median from both sides."""
    gaps = np.diff(d.array)
    c = d.median_rank
    left = gaps[: c - 1]  # x_{i+1} - x_i for i < c
    right = gaps[c - 1:]  # x_j - x_{j-1} for j > c
    return bool(np.all(left[1:] <= left[:-1] + tol) and np.all(right[1:] + tol >= right[:-1]))


@dataclass(frozen=True)
class SinglePeakedDensity:
    """Piecewise-constant density; zero outside ``[breakpoints[0], breakpoints[-1]]``."""

    breakpoints: tuple[float, ...]
    densities: tuple[float, ...]
    peak: float

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "densities", tuple(float(f) for f in self.densities))
        object.__setattr__(self, "peak", float(self.peak))
        if len(self.breakpoints) != len(self.densities) + 1 or not self.densities:
            raise InvalidCertificate("need one more breakpoint than densities")

    @property
    def _b(self) -> np.ndarray:
        return np.asarray(self.breakpoints)

    @property
    def _f(self) -> np.ndarray:
        return np.asarray(self.densities)

    @property
    def piece_masses(self) -> np.ndarray:
        return np.diff(self._b) * self._f

    def cdf(self, x) -> np.ndarray:
        b, f = self._b, self._f
        cum = np.concatenate(([0.0], np.cumsum(self.piece_masses)))
        x = np.asarray(x, dtype=np.float64)
        k = np.clip(np.searchsorted(b, x, side="right") - 1, 0, f.size - 1)
        val = cum[k] + (np.clip(x, b[0], b[-1]) - b[k]) * f[k]
        return np.where(x < b[0], 0.0, np.where(x >= b[-1], cum[-1], val))

    def inverse_cdf(self, u) -> np.ndarray:
        b, f = self._b, self._f
        masses = self.piece_masses
        cum = np.concatenate(([0.0], np.cumsum(masses)))
        u = np.asarray(u, dtype=np.float64) * cum[-1]
        k = np.searchsorted(cum[1:], u, side="right")
        k = np.minimum(k, f.size - 1)
        # skip zero-mass pieces: searchsorted on cum[1:] already lands on a positive piece
        frac = np.where(masses[k] > 0, (u - cum[k]) / np.where(masses[k] > 0, masses[k], 1.0), 0.0)
        return np.minimum(b[k] + np.clip(frac, 0.0, 1.0) * (b[k + 1] - b[k]), b[-1])

    def median(self) -> float:
        return float(self.inverse_cdf(0.5))

    def violations(self, m: float | None = None) -> list[str]:
        """Reasons this density is not a member of the single-peaked-at-median class."""
        out = []
        b, f = self._b, self._f
        if np.any(np.diff(b) <= 0):
            out.append("breakpoints not strictly increasing")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            out.append("negative or non-finite density")
        if m is not None and (b[0] < -m / 2 - GAP_TOL or b[-1] > m / 2 + GAP_TOL):
            out.append("breakpoints outside the domain")
        if out:
            return out
        total = float(np.sum(self.piece_masses))
        if abs(total - 1.0) > CERT_TOL:
            out.append(f"integrates to {total!r}, not 1")
        if not b[0] <= self.peak <= b[-1] and not (m is not None and abs(self.peak) <= m / 2):
            out.append("peak outside the support")
        if abs(float(self.cdf(self.peak)) - 0.5) > CERT_TOL:
            out.append("peak is not the median of the density")
        tol = GAP_TOL * max(1.0, float(np.max(f)))
        left = f[b[:-1] < self.peak]
        right = f[b[1:] > self.peak]
        if np.any(np.diff(left) < -tol) or np.any(np.diff(right) > tol):
            out.append("density is not single-peaked at the peak")
        return out

    def to_json(self) -> str:
        bp = ", ".join(format_float(x) for x in self.breakpoints)
        ds = ", ".join(format_float(x) for x in self.densities)
        return f'{{"breakpoints": [{bp}], "densities": [{ds}], "peak": {format_float(self.peak)}}}'

    @classmethod
    def from_dict(cls, obj: dict) -> "SinglePeakedDensity":
        try:
            return cls(obj["breakpoints"], obj["densities"], obj["peak"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed certificate object: {exc}") from exc

    @classmethod
    def uniform(cls, m: float) -> "SinglePeakedDensity":
        return cls((-m / 2, m / 2), (1.0 / m,), 0.0)


def read_certificate(path: str | Path) -> SinglePeakedDensity:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read certificate {path}: {exc}") from exc
    return SinglePeakedDensity.from_dict(obj)


def ks_distance(d: Dataset | Sequence[float], p: SinglePeakedDensity, m: float | None = None) -> float:
    """Exact sup-distance between the empirical CDF of ``d`` and the CDF of ``p``.

    The empirical CDF is a step function and the density CDF is piecewise
    linear, so the supremum is attained at a jump (as a left or right limit)
    or at a breakpoint.
    """
    if isinstance(d, Dataset):
        x = d.array
        m = d.m
    else:
        x = np.sort(np.asarray(d, dtype=np.float64))
    if m is not None:
        b = p.breakpoints
        if b[0] < -m / 2 - GAP_TOL or b[-1] > m / 2 + GAP_TOL:
            raise DomainMismatch("certificate support extends outside the dataset's domain")
    n = x.size
    pts = np.unique(np.concatenate((x, np.asarray(p.breakpoints))))
    F = p.cdf(pts)
    right = np.searchsorted(x, pts, side="right") / n
    left = np.searchsorted(x, pts, side="left") / n
    return float(max(np.max(np.abs(F - right)), np.max(np.abs(F - left))))


def verify_spm_certificate(d: Dataset, p: SinglePeakedDensity, lam: float) -> bool:
    """True iff ``p`` is a valid single-peaked-at-median density within ``lam`` of ``d``.

    Raises :class:`InvalidCertificate` when ``p`` itself is not a valid
    member of the density class.
    """
    if lam < 0:
        raise InvalidParams("lambda must be nonnegative")
    bad = p.violations(d.m)
    if bad:
        raise InvalidCertificate("; ".join(bad))
    return ks_distance(d, p) <= lam + CERT_TOL


def ctm_certificate(d: Dataset) -> SinglePeakedDensity:
    """Density putting mass 1/(n-1) uniformly on each gap between consecutive agents."""
    gaps = np.diff(d.array)
    if d.n < 3:
        raise InvalidParams("need at least 3 agents")
    if np.any(gaps <= 0):
        raise ZeroGap("consecutive agents coincide; the certificate density would be infinite")
    if not is_ctm(d):
        raise NotCTM("dataset is not collapsing towards the median")
    dens = 1.0 / ((d.n - 1) * gaps)
    return SinglePeakedDensity(d.locations, tuple(dens), d.median)


def dkw_bound(n: int, lam: float) -> float:
    """Dvoretzky-Kiefer-Wolfowitz tail bound min(1, 2 exp(-2 n lambda^2))."""
    if n < 1 or lam < 0:
        raise InvalidParams("need n >= 1 and lambda >= 0")
    return min(1.0, 2.0 * math.exp(-2.0 * n * lam * lam))


def dkw_radius(n: int, beta: float) -> float:
    """Smallest lambda with dkw_bound(n, lambda) <= beta."""
    return math.sqrt(math.log(2.0 / beta) / (2.0 * n))


# streams for dataset sampling live apart from the mechanism's streams
_DATA_SEED_TAG = 0x5D4A7C1E3B2F9081


def sample_from_density(p: SinglePeakedDensity, n: int, rng_seed: int, trial_index: int,
                        m: float | None = None) -> Dataset:
    """n i.i.d. inverse-CDF draws from ``p``, determined by (seed, trial_index)."""
    if n < 1 or n % 2 == 0:
        raise InvalidParams(f"n must be a positive odd integer, got {n}")
    if m is None:
        m = 2.0 * max(abs(p.breakpoints[0]), abs(p.breakpoints[-1]))
    u = kernels.uniforms(int(rng_seed) ^ _DATA_SEED_TAG, np.arange(n, dtype=np.uint64), int(trial_index) + 2)
    return load_dataset(p.inverse_cdf(u), m)


# ---------------------------------------------------------------------------
# generators


def _floats(values) -> list[float]:
    return [float(v) for v in values]


def _frac(x) -> Fraction:
    # floats are read as the decimal they print as, so lambda=0.3 means 3/10
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _check_n(n: int, minimum: int = 1) -> None:
    if not isinstance(n, (int, np.integer)) or n < minimum or n % 2 == 0:
        raise InvalidParams(f"n must be an odd integer >= {minimum}, got {n!r}")


def _check_m(m) -> Fraction:
    if not (float(m) > 0 and math.isfinite(float(m))):
        raise InvalidParams(f"m must be positive, got {m!r}")
    return _frac(m)


def ctm_worst(n: int, k: int, m: float) -> Dataset:
    """Worst CTM dataset for the event p <= k: stack at m/2, the rest evenly spaced."""
    _check_n(n)
    M = _check_m(m)
    h = n // 2
    if not 0 <= k <= h:
        raise InvalidParams(f"k must lie in [0, {h}], got {k}")
    r = h - k
    pts = [M / 2] * (n - r) + [M / 2 - i * M / r for i in range(1, r + 1)]
    return load_dataset(_floats(pts), float(m))


def spm_s_ceil(n: int, lam: float) -> int:
    """Largest integer s with s/n < lambda."""
    return math.ceil(_frac(lam) * n) - 1


def spm_s_floor(n: int, lam: float) -> int:
    return math.floor(_frac(lam) * n) - 1


def spm_worst(n: int, k: int, m: float, lam: float) -> Dataset:
    """Worst SPM_lambda configuration for the event p <= k.

    s = ceil(lambda n) - 1 agents sit at -m/2 and the rest of the left half is
    spaced m / (floor(n/2) - k + lambda n) apart from there.
    """
    _check_n(n)
    M = _check_m(m)
    h = n // 2
    if not 0 <= k <= h:
        raise InvalidParams(f"k must lie in [0, {h}], got {k}")
    if lam < 0:
        raise InvalidParams("lambda must be nonnegative")
    L = _frac(lam)
    s = spm_s_ceil(n, lam)
    r = h - k
    if s < 0:
        raise InvalidParams(f"s = ceil(lambda n) - 1 = {s} must be >= 0")
    if s > r:
        raise InvalidParams(f"s = {s} exceeds floor(n/2) - k = {r}")
    step = M / (r + L * n)
    pts = [M / 2] * (n - r) + [-M / 2] * s + [-M / 2 + i * step for i in range(1, r - s + 1)]
    return load_dataset(_floats(pts), float(m))


def impossibility_pair(n: int, m: float) -> tuple[Dataset, Dataset]:
    """Neighbouring datasets whose medians sit at opposite ends of V."""
    _check_n(n)
    _check_m(m)
    lo, hi = -float(m) / 2, float(m) / 2
    c, h = (n + 1) // 2, n // 2
    return load_dataset([lo] * c + [hi] * h, m), load_dataset([lo] * h + [hi] * c, m)


def fair_lb_steps(n: int, m: float, gamma: float) -> int:
    """gamma expressed as a whole number of grid steps m/(n-1); raises if it is not one."""
    ratio = float(gamma) * (n - 1) / float(m)
    h = round(ratio)
    if abs(ratio - h) > 1e-9 * max(1.0, abs(ratio)):
        raise InvalidParams(f"gamma={gamma!r} is not an integer multiple of m/(n-1)")
    return int(h)


def fair_lb_rational(n: int, m, gamma) -> tuple[list[Fraction], list[Fraction]]:
    """Exact locations of (D_0, D_gamma) before conversion to floats."""
    _check_n(n, 5)
    M = _check_m(m)
    h = fair_lb_steps(n, m, gamma)
    if h < 1:
        raise InvalidParams("gamma must be a positive multiple of m/(n-1)")
    if 3 * h >= n - 1:
        raise InvalidParams("gamma must be < m/3")
    step = M / (n - 1)
    half = (n - 1) // 2
    d0 = [j * step for j in range(-half, half + 1)]
    n_gamma = 1 + 2 * h
    centre = -h * step
    side = (n - n_gamma) // 2
    dg = [centre] * n_gamma + [centre + j * step for j in range(-side, side + 1) if j != 0]
    return sorted(d0), sorted(dg)


def fair_lb_pair(n: int, m: float, gamma: float) -> tuple[Dataset, Dataset]:
    """Evenly spaced D_0 and D_gamma with 1 + 2*gamma*(n-1)/m agents stacked at -gamma."""
    d0, dg = fair_lb_rational(n, m, gamma)
    return load_dataset(_floats(d0), float(m)), load_dataset(_floats(dg), float(m))


def spm_lb_rational(n: int, m, lam) -> tuple[list[Fraction], list[Fraction]]:
    """Exact locations of (D_1, D_2) before conversion to floats."""
    _check_n(n, 3)
    M = _check_m(m)
    s = spm_s_floor(n, lam)
    c = (n + 1) // 2
    if s < 1:
        raise InvalidParams(f"s = floor(lambda n) - 1 = {s} must be >= 1")
    if s > c - 1:
        raise InvalidParams(f"s = {s} too large for n = {n}")
    grid = {j: -M / 2 + j * M / n for j in range(1, n + 1)}
    moved1 = set(range(c - s + 1, c + 1))
    moved2 = set(range(c - s, c))
    d1 = [-M / 2 if j in moved1 else grid[j] for j in grid]
    d2 = [-M / 2 if j in moved2 else grid[j] for j in grid]
    return sorted(d1), sorted(d2)


def spm_lb_pair(n: int, m: float, lam: float) -> tuple[Dataset, Dataset]:
    """Neighbours D_1, D_2 in SPM_lambda whose medians are s*m/n apart, s = floor(lambda n) - 1."""
    d1, d2 = spm_lb_rational(n, m, lam)
    return load_dataset(_floats(d1), float(m)), load_dataset(_floats(d2), float(m))


GENERATORS = {
    "ctm_worst": ctm_worst,
    "spm_worst": spm_worst,
    "impossibility_pair": impossibility_pair,
    "fair_lb_pair": fair_lb_pair,
    "spm_lb_pair": spm_lb_pair,
}


def gen_adversarial(kind: str, **params):
    """Dispatch to one of the named generators."""
    try:
        fn = GENERATORS[kind.replace("-", "_")]
    except KeyError:
        raise InvalidParams(f"unknown generator kind {kind!r}; expected one of {sorted(GENERATORS)}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise InvalidParams(f"bad parameters for {kind}: {exc}") from None


def uniform_dataset(n: int, m: float) -> Dataset:
    """n agents evenly spaced from -m/2 to m/2."""
    _check_n(n)
    M = _check_m(m)
    if n == 1:
        return load_dataset([0.0], float(m))
    return load_dataset(_floats(-M / 2 + i * M / (n - 1) for i in range(n)), float(m))


# ---------------------------------------------------------------------------
# random instances for property checks


def random_ctm(n: int, m: float, rng: np.random.Generator, max_tries: int = 1000) -> Dataset:
    """Random member of CTM.

    Draws floor(n/2) gaps per side, orders them to shrink towards a random
    median position, and rejects draws that leave the domain. A few gaps are
    zeroed at random so stacked configurations are covered too.
    """
    h = n // 2
    for _ in range(max_tries):
        t = rng.uniform(-m / 2, m / 2)
        scale = rng.uniform(0.05, 1.0) * m / max(h, 1)
        gl = np.sort(rng.exponential(scale, h))  # ascending: nearest the median first
        gr = np.sort(rng.exponential(scale, h))
        gl[rng.random(h) < 0.1] = 0.0
        gr[rng.random(h) < 0.1] = 0.0
        gl, gr = np.sort(gl), np.sort(gr)
        left = t - np.cumsum(gl)[::-1]
        right = t + np.cumsum(gr)
        xs = np.concatenate((left, [t], right))
        if xs[0] >= -m / 2 and xs[-1] <= m / 2:
            d = load_dataset(xs, m)
            if is_ctm(d):
                return d
    raise RuntimeError("could not draw a CTM dataset")


def random_single_peaked(m: float, rng: np.random.Generator, pieces: int = 8) -> SinglePeakedDensity:
    """Random piecewise-constant density on V, single-peaked at its median."""
    lo, hi = -m / 2, m / 2
    a = rng.uniform(lo, hi)
    b = rng.uniform(lo, hi)
    start, end = min(a, b), max(a, b)
    if end - start < 1e-3 * m:
        start, end = lo, hi
    peak = rng.uniform(start, end)
    nl = int(rng.integers(1, pieces))
    nr = int(rng.integers(1, pieces))
    bl = np.sort(rng.uniform(start, peak, nl - 1))
    br = np.sort(rng.uniform(peak, end, nr - 1))
    edges = np.concatenate(([start], bl, [peak], br, [end]))
    fl = np.sort(rng.uniform(0.1, 1.0, nl))  # non-decreasing up to the peak
    fr = np.sort(rng.uniform(0.1, 1.0, nr))[::-1]
    wl, wr = np.diff(edges[: nl + 1]), np.diff(edges[nl:])
    fl = fl * 0.5 / np.sum(fl * wl)
    fr = fr * 0.5 / np.sum(fr * wr)
    keep = np.diff(edges) > 0
    dens = np.concatenate((fl, fr))[keep]
    edges = np.concatenate((edges[:1], edges[1:][keep]))
    return SinglePeakedDensity(tuple(edges), tuple(dens), peak)
