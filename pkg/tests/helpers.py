"""Random instance generators and brute-force oracles shared by the tests."""
import numpy as np

from dpfl.core import Dataset, load_dataset


def random_dataset(rng: np.random.Generator, n: int, m: float = 2.0, grid: bool | None = None) -> Dataset:
    """Random dataset; about half the time snapped to a coarse grid so ties occur."""
    if grid is None:
        grid = rng.random() < 0.5
    if grid:
        steps = int(rng.integers(2, 9))
        xs = rng.integers(0, steps + 1, n) * (m / steps) - m / 2
    else:
        xs = rng.uniform(-m / 2, m / 2, n)
    return load_dataset(xs, m)


def random_neighbor(rng: np.random.Generator, d: Dataset) -> Dataset:
    """Change one agent: move it to a fresh point or onto another agent."""
    xs = list(d.locations)
    i = int(rng.integers(d.n))
    if rng.random() < 0.3:
        xs[i] = xs[int(rng.integers(d.n))]
    else:
        xs[i] = float(rng.uniform(-d.m / 2, d.m / 2))
    return load_dataset(xs, d.m)


def random_location(rng: np.random.Generator, d: Dataset) -> float:
    """Either a uniform point or one of the agents (to hit boundary cases)."""
    if rng.random() < 0.3:
        return d.locations[int(rng.integers(d.n))]
    return float(rng.uniform(-d.m / 2, d.m / 2))


def q_rank_oracle(d: Dataset, a: float) -> int:
    """Percentile loss by counting ranks rather than minimising over indices."""
    xs = np.asarray(d.locations)
    c, t = d.median_rank, d.median
    if a == t:
        return 0
    if a < xs[0] or a > xs[-1]:
        return c
    if a < t:
        return c - int(np.count_nonzero(xs <= a))
    return int(np.count_nonzero(xs < a)) + 1 - c


def p_grid_oracle(d: Dataset, ell: float, alpha: float, points: int = 201) -> int:
    """min of q over an evenly spaced grid of the window, plus T(D) if it lies inside."""
    w = alpha * d.m
    grid = np.linspace(ell - w, ell + w, points)
    vals = [q_rank_oracle(d, float(a)) for a in grid]
    if ell - w <= d.median <= ell + w:
        vals.append(0)
    return min(vals)
