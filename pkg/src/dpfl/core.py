"""Datasets of agent locations on the interval [-m/2, m/2]."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DataError,
    EvenN,
    LocationOutOfDomain,
    NonPositiveDiameter,
    OutOfDomain,
    SizeMismatch,
)

DOMAIN_TOL = 1e-12


def format_float(x: float) -> str:
    """17 significant digits, the textual form used by every writer here."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Domain:
    m: float

    def __post_init__(self):
        try:
            m = float(self.m)
        except (TypeError, ValueError):
            raise NonPositiveDiameter(f"diameter must be a number, got {self.m!r}") from None
        if not (math.isfinite(m) and m > 0):
            raise NonPositiveDiameter(f"diameter must be positive and finite, got {self.m!r}")
        object.__setattr__(self, "m", m)

    @property
    def lo(self) -> float:
        return -self.m / 2

    @property
    def hi(self) -> float:
        return self.m / 2

    def contains(self, x: float, tol: float = DOMAIN_TOL) -> bool:
        return -self.m / 2 - tol <= x <= self.m / 2 + tol

    def check(self, ell: float) -> float:
        """Validate a proposed facility location and clamp it into V."""
        ell = float(ell)
        if not self.contains(ell):
            raise LocationOutOfDomain(f"location {ell!r} outside [{self.lo}, {self.hi}]")
        return min(max(ell, self.lo), self.hi)


@dataclass(frozen=True)
class Dataset:
    """Sorted multiset of an odd number of agent locations.

    Build instances with :func:`load_dataset`; the constructor only checks the
    invariants and does not sort or clamp.
    """

    domain: Domain
    locations: tuple[float, ...]

    def __post_init__(self):
        xs = self.locations
        if len(xs) == 0:
            raise DataError("dataset is empty")
        if len(xs) % 2 == 0:
            raise EvenN(f"number of agents must be odd, got {len(xs)}")
        lo, hi = self.domain.lo, self.domain.hi
        for a, b in zip(xs, xs[1:]):
            if b < a:
                raise DataError("locations must be sorted ascending")
        if xs[0] < lo or xs[-1] > hi:
            raise OutOfDomain(f"locations must lie in [{lo}, {hi}]")

    @property
    def n(self) -> int:
        return len(self.locations)

    @property
    def m(self) -> float:
        return self.domain.m

    @property
    def median_rank(self) -> int:
        """1-based rank of the median agent, ceil(n/2)."""
        return (self.n + 1) // 2

    @property
    def median(self) -> float:
        return self.locations[self.median_rank - 1]

    @cached_property
    def array(self) -> np.ndarray:
        a = np.array(self.locations, dtype=np.float64)
        a.flags.writeable = False
        return a

    def to_json(self) -> str:
        locs = ", ".join(format_float(x) for x in self.locations)
        return f'{{"m": {format_float(self.m)}, "locations": [{locs}]}}'


def load_dataset(raw: Iterable[float], m: float) -> Dataset:
    """Validate, clamp and sort raw agent locations."""
    domain = Domain(m)
    xs = [float(x) for x in raw]
    if not xs:
        raise DataError("dataset is empty")
    if len(xs) % 2 == 0:
        raise EvenN(f"number of agents must be odd, got {len(xs)}")
    for x in xs:
        if not math.isfinite(x) or not domain.contains(x):
            raise OutOfDomain(f"location {x!r} outside [{domain.lo}, {domain.hi}]")
    xs = sorted(min(max(x, domain.lo), domain.hi) for x in xs)
    return Dataset(domain, tuple(xs))


def change_one_distance(a: Dataset, b: Dataset) -> int:
    """Size of the multiset difference a - b (exact float equality)."""
    if a.n != b.n:
        raise SizeMismatch(f"datasets have {a.n} and {b.n} agents")
    xs, ys = a.locations, b.locations
    i = j = matched = 0
    while i < len(xs) and j < len(ys):
        if xs[i] == ys[j]:
            matched += 1
            i += 1
            j += 1
        elif xs[i] < ys[j]:
            i += 1
        else:
            j += 1
    return a.n - matched


@dataclass(frozen=True)
class NeighborPair:
    a: Dataset
    b: Dataset
    distance: int = field(default=-1)

    def __post_init__(self):
        d = change_one_distance(self.a, self.b)
        if self.distance not in (-1, d):
            raise DataError(f"stated distance {self.distance} != actual {d}")
        object.__setattr__(self, "distance", d)


def dataset_from_dict(obj: dict) -> Dataset:
    try:
        return load_dataset(obj["locations"], obj["m"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed dataset object: {exc}") from exc


def read_dataset(path: str | Path) -> Dataset:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    return dataset_from_dict(obj)


def write_dataset(d: Dataset, path: str | Path) -> None:
    Path(path).write_text(d.to_json() + "\n", encoding="utf-8")


def as_dataset(x: Dataset | Sequence[float], m: float | None = None) -> Dataset:
    if isinstance(x, Dataset):
        return x
    if m is None:
        raise DataError("a diameter is required to build a dataset from raw locations")
    return load_dataset(x, m)
