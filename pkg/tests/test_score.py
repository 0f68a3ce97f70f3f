import numpy as np
import pytest

from dpfl.core import load_dataset
from dpfl.errors import LocationOutOfDomain
from dpfl.score import (
    PiecewiseConstantFn,
    WideningParam,
    p_alpha_many,
    p_alpha_pieces,
    p_alpha_value,
    q_value,
)
from helpers import p_grid_oracle, q_rank_oracle, random_dataset, random_location, random_neighbor


def test_q_examples(d5):
    assert q_value(d5, 0.0) == 0
    assert q_value(d5, 0.25) == 1
    assert q_value(d5, 0.75) == 2
    assert q_value(d5, -0.75) == 2


def test_q_outside_support():
    d = load_dataset([-0.5, 0, 0.5], 2.0)
    assert q_value(d, 0.9) == 2
    assert q_value(d, -0.9) == 2


def test_q_matches_rank_oracle(rng):
    for _ in range(2000):
        d = random_dataset(rng, 2 * int(rng.integers(0, 11)) + 1)
        a = random_location(rng, d)
        assert q_value(d, a) == q_rank_oracle(d, a)


def test_q_zero_only_at_median(rng):
    for _ in range(300):
        d = random_dataset(rng, 7)
        a = random_location(rng, d)
        assert (q_value(d, a) == 0) == (a == d.median)


def test_widening_param():
    assert WideningParam(0.0).alpha == 0.0
    for bad in (-0.1, 1.5, float("nan")):
        with pytest.raises(ValueError):
            WideningParam(bad)


def test_p_examples(d5):
    assert p_alpha_value(d5, 0.6, 0.1) == 1
    for ell in np.linspace(-1, 1, 21):
        assert p_alpha_value(d5, ell, 0.0) == q_value(d5, ell)
        assert p_alpha_value(d5, ell, 1.0) == 0


def test_p_out_of_domain(d5):
    with pytest.raises(LocationOutOfDomain):
        p_alpha_value(d5, -1.2, 0.1)


def test_pieces_d5(d5):
    f = p_alpha_pieces(d5, 0.1)
    assert np.allclose(f.edges, [-1, -0.7, -0.2, 0.2, 0.7, 1], atol=1e-12)
    assert list(f.values) == [2, 1, 0, 1, 2]
    grid = np.linspace(-1, 1, 201)
    assert [f(x) for x in grid] == [p_grid_oracle(d5, x, 0.1) for x in grid]


def test_pieces_stacked(stacked):
    f = p_alpha_pieces(stacked, 0.1)
    assert np.allclose(f.edges, [-1, -0.2, 0.2, 1], atol=1e-12)
    assert list(f.values) == [3, 0, 3]


def test_pieces_alpha_one(d5):
    f = p_alpha_pieces(d5, 1.0)
    assert f.edges == (-1.0, 1.0) and list(f.values) == [0]


def test_piece_count_can_exceed_n_plus_one():
    # the band plus one step per side plus both "outside" tails
    d = load_dataset([-0.4, -0.2, 0.1], 2.0)
    f = p_alpha_pieces(d, 0.2)
    assert list(f.values) == [2, 1, 0, 1, 2]
    assert len(f.values) == d.n + 2


def test_pieces_match_pointwise(rng):
    for _ in range(300):
        d = random_dataset(rng, 2 * int(rng.integers(0, 8)) + 1)
        alpha = float(rng.choice([0.0, 0.01, 0.05, 0.2, 1 / d.n, 0.7]))
        f = p_alpha_pieces(d, alpha)
        assert f.edges[0] == -d.m / 2 and f.edges[-1] == d.m / 2
        assert all(b > a for a, b in zip(f.edges, f.edges[1:]))
        assert len(f.values) <= d.n + 2
        pts = np.concatenate((rng.uniform(-1, 1, 30), f.edges, d.locations))
        pts = np.clip(pts, -1, 1)
        vals = p_alpha_many(d, pts, alpha)
        assert [f(x) for x in pts] == list(vals)
        assert [p_alpha_value(d, x, alpha) for x in pts[:10]] == list(vals[:10])


def test_grid_oracle(rng):
    for _ in range(150):
        d = random_dataset(rng, 2 * int(rng.integers(0, 6)) + 1)
        alpha = float(rng.choice([0.0, 0.05, 0.13, 0.3]))
        ell = random_location(rng, d)
        assert p_alpha_value(d, ell, alpha) == p_grid_oracle(d, ell, alpha)


def test_order_and_unimodality(rng):
    for _ in range(200):
        d = random_dataset(rng, 9)
        alpha = float(rng.uniform(0, 0.3))
        grid = np.linspace(-1, 1, 101)
        p = p_alpha_many(d, grid, alpha)
        q = np.array([q_value(d, x) for x in grid])
        assert np.all(p >= 0) and np.all(p <= q) and np.all(q <= d.median_rank)
        left = p[grid < d.median]
        right = p[grid > d.median]
        assert np.all(np.diff(left) <= 0) and np.all(np.diff(right) >= 0)


@pytest.mark.parametrize("alpha_kind", ["zero", "small", "auto"])
def test_sensitivity_one(rng, alpha_kind):
    grid = np.linspace(-1, 1, 100)
    for _ in range(200):
        d = random_dataset(rng, 2 * int(rng.integers(1, 11)) + 1)
        alpha = {"zero": 0.0, "small": 0.05, "auto": 1 / d.n}[alpha_kind]
        e = random_neighbor(rng, d)
        diff = p_alpha_many(d, grid, alpha) - p_alpha_many(e, grid, alpha)
        assert np.max(np.abs(diff)) <= 1


def test_piecewise_fn_validates():
    with pytest.raises(ValueError):
        PiecewiseConstantFn((0.0, 0.0, 1.0), (1, 2), 0.0, 0.0)
