import numpy as np
import pytest

from dpfl.core import load_dataset
from dpfl.errors import LocationOutOfDomain
from dpfl.metrics import (
    crossed_set,
    fair,
    fair_many,
    loss_vector,
    optimal_location,
    social_welfare,
    swdiff,
    swdiff_many,
)
from dpfl.score import q_value
from helpers import random_dataset, random_location


def test_optimal_location():
    assert optimal_location(load_dataset([-1, 0, 1], 2.0)) == 0
    assert optimal_location(load_dataset([-1, -1, 1], 2.0)) == -1
    assert optimal_location(load_dataset([0, 0, 0, 0, 1], 2.0)) == 0


def test_social_welfare(d5):
    assert social_welfare(d5, 0.0) == pytest.approx(-3.0, abs=1e-12)
    assert social_welfare(d5, 0.6) == pytest.approx(-3.8, abs=1e-12)
    assert social_welfare(load_dataset([0, 0, 0], 2.0), 0.0) == 0.0


def test_loss_vector(d5):
    assert np.allclose(loss_vector(d5, 0.6), [0.6, 0.6, 0.6, -0.4, -0.6], atol=1e-12)
    assert np.all(loss_vector(d5, 0.0) == 0)
    assert np.allclose(loss_vector(load_dataset([0, 0, 0], 2.0), 1.0), [1, 1, 1])


def test_fair_examples(d5):
    assert fair(d5, 0.0) == 0
    assert fair(d5, 0.6) == pytest.approx(0.6)
    assert fair(d5, 0.6, mode="oracle") == pytest.approx(0.6)
    assert fair(load_dataset([-1, -1, 1], 2.0), 0.0) == 1.0


def test_crossed_set(d5):
    assert crossed_set(d5, 0.0) == frozenset()
    assert crossed_set(d5, 0.6) == {4}
    assert crossed_set(d5, -0.75) == {2}
    # a tie with the location is included, contributing zero distance
    assert crossed_set(d5, 0.5) == {4}


def test_swdiff_examples(d5):
    assert swdiff(d5, 0.0) == 0
    assert swdiff(d5, 0.6) == pytest.approx(0.8, abs=1e-12)
    assert swdiff(d5, 0.6, mode="oracle") == pytest.approx(0.8, abs=1e-12)
    assert swdiff(load_dataset([0, 0, 0], 2.0), 1.0) == pytest.approx(3.0)


def test_out_of_domain(d5):
    for fn in (fair, swdiff, social_welfare, crossed_set, loss_vector):
        with pytest.raises(LocationOutOfDomain):
            fn(d5, 1.5)


def test_bad_mode(d5):
    with pytest.raises(ValueError):
        fair(d5, 0.1, mode="approx")


def test_closed_forms_match_oracles(rng):
    for _ in range(1000):
        d = random_dataset(rng, 2 * int(rng.integers(1, 11)) + 1)
        ell = random_location(rng, d)
        assert abs(fair(d, ell) - fair(d, ell, "oracle")) <= 1e-9
        assert abs(swdiff(d, ell) - swdiff(d, ell, "oracle")) <= 1e-9


def test_crossed_set_one_sided(rng):
    for _ in range(300):
        d = random_dataset(rng, 9)
        ell = random_location(rng, d)
        cs = crossed_set(d, ell)
        c = d.median_rank
        assert (not cs) == (ell == d.median) or all(i != c for i in cs)
        assert all(i > c for i in cs) or all(i < c for i in cs)


def test_ordering_and_ranges(rng):
    for _ in range(500):
        d = random_dataset(rng, 2 * int(rng.integers(0, 10)) + 1)
        ell = random_location(rng, d)
        f, s = fair(d, ell), swdiff(d, ell)
        assert 0 <= f <= s + 1e-12
        assert f <= d.m and s <= d.m * d.n + 1e-9


def test_swdiff_bounded_by_q(rng):
    for _ in range(500):
        d = random_dataset(rng, 2 * int(rng.integers(1, 10)) + 1)
        ell = random_location(rng, d)
        if ell == d.median:
            continue
        assert swdiff(d, ell) <= (2 * q_value(d, ell) - 1) * fair(d, ell) + 1e-9


def test_widened_score_does_not_bound_swdiff(d5):
    # the same inequality fails with p_alpha in place of q
    from dpfl.score import p_alpha_value

    p = p_alpha_value(d5, 0.6, 0.1)
    assert p == 1
    assert swdiff(d5, 0.6) > (2 * p - 1) * fair(d5, 0.6)


def test_vectorised_match_scalar(rng):
    for _ in range(50):
        d = random_dataset(rng, 11)
        ells = rng.uniform(-1, 1, 40)
        assert np.allclose(fair_many(d, ells), [fair(d, e) for e in ells], atol=1e-12)
        assert np.allclose(swdiff_many(d, ells), [swdiff(d, e) for e in ells], atol=1e-9)
