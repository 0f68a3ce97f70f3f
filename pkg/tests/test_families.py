import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from dpfl.core import change_one_distance, load_dataset
from dpfl.errors import DomainMismatch, InvalidCertificate, InvalidParams, NotCTM, ZeroGap
from dpfl.families import (
    SinglePeakedDensity,
    ctm_certificate,
    ctm_worst,
    dkw_bound,
    dkw_radius,
    fair_lb_pair,
    gen_adversarial,
    impossibility_pair,
    is_ctm,
    ks_distance,
    random_ctm,
    random_single_peaked,
    read_certificate,
    sample_from_density,
    spm_lb_pair,
    spm_s_ceil,
    spm_s_floor,
    spm_worst,
    uniform_dataset,
    verify_spm_certificate,
)

UNIFORM = SinglePeakedDensity.uniform(2.0)


def ks_bruteforce(xs, p, probes=20001):
    # oracle: evaluate on a dense grid plus both sides of every jump
    xs = np.sort(np.asarray(xs, dtype=float))
    eps = 1e-12
    pts = np.concatenate((np.linspace(-1, 1, probes), xs - eps, xs, xs + eps, p.breakpoints))
    fn = np.searchsorted(xs, pts, side="right") / xs.size
    return float(np.max(np.abs(fn - p.cdf(pts))))


class TestIsCTM:
    def test_examples(self):
        assert is_ctm(load_dataset([-1, 1, 1, 1, 1], 2.0))
        assert not is_ctm(load_dataset([-1, -0.9, 0, 0.9, 1], 2.0))
        assert is_ctm(load_dataset([0.3] * 7, 2.0))
        assert is_ctm(load_dataset([-1, 0, 1], 2.0))

    def test_right_side_violation(self):
        assert not is_ctm(load_dataset([-1, -0.5, 0, 0.9, 1], 2.0))

    def test_random_ctm_members(self, rng):
        for _ in range(100):
            assert is_ctm(random_ctm(int(rng.choice([3, 5, 9, 21])), 2.0, rng))


class TestKS:
    def test_examples(self):
        assert ks_distance([-1.0, 1.0], UNIFORM, 2.0) == pytest.approx(0.5)
        assert ks_distance(load_dataset([0], 2.0), UNIFORM) == pytest.approx(0.5)

    def test_quantile_matching(self, rng):
        for _ in range(50):
            p = random_single_peaked(2.0, rng)
            n = 2 * int(rng.integers(1, 50)) + 1
            xs = p.inverse_cdf((2 * np.arange(1, n + 1) - 1) / (2 * n))
            assert ks_distance(load_dataset(xs, 2.0), p) <= 1 / (2 * n) + 1e-12

    def test_matches_bruteforce(self, rng):
        for _ in range(50):
            p = random_single_peaked(2.0, rng)
            xs = rng.uniform(-1, 1, 2 * int(rng.integers(1, 8)) + 1)
            if rng.random() < 0.3:
                xs[:3] = xs[0]
            assert ks_distance(load_dataset(xs, 2.0), p) == pytest.approx(ks_bruteforce(xs, p), abs=1e-9)

    def test_domain_mismatch(self):
        with pytest.raises(DomainMismatch):
            ks_distance(load_dataset([0], 1.0), UNIFORM)


class TestCertificates:
    def test_threshold(self):
        d = load_dataset([-1.0, 1.0, 1.0], 2.0)
        ks = ks_distance(d, UNIFORM)
        assert verify_spm_certificate(d, UNIFORM, ks)
        assert not verify_spm_certificate(d, UNIFORM, ks - 1e-6)
        assert verify_spm_certificate(load_dataset([-0.5, 0, 0.5], 2.0), UNIFORM, 0.5)

    def test_peak_not_median(self):
        bad = SinglePeakedDensity((-1.0, 1.0), (0.5,), 0.5)
        with pytest.raises(InvalidCertificate, match="median"):
            verify_spm_certificate(load_dataset([0], 2.0), bad, 1.0)

    def test_not_single_peaked(self):
        bad = SinglePeakedDensity((-1.0, -0.5, 0.5, 1.0), (0.6, 0.2, 0.6), 0.0)
        with pytest.raises(InvalidCertificate, match="single-peaked"):
            verify_spm_certificate(load_dataset([0], 2.0), bad, 1.0)

    def test_not_normalised(self):
        bad = SinglePeakedDensity((-1.0, 1.0), (0.4,), 0.0)
        with pytest.raises(InvalidCertificate, match="integrates"):
            verify_spm_certificate(load_dataset([0], 2.0), bad, 1.0)

    def test_negative_lambda(self):
        with pytest.raises(InvalidParams):
            verify_spm_certificate(load_dataset([0], 2.0), UNIFORM, -0.1)

    def test_ctm_certificate_three_points(self):
        d = load_dataset([-1, 0, 1], 2.0)
        cert = ctm_certificate(d)
        assert cert.breakpoints == (-1.0, 0.0, 1.0) and cert.densities == (0.5, 0.5)
        # hand CDF comparison: the sup is 1/3, attained at x_1 and just below x_3
        assert ks_distance(d, cert) == pytest.approx(1 / 3, abs=1e-12)
        assert verify_spm_certificate(d, cert, 1 / (d.n - 1))

    def test_uniform_spacing_gives_constant(self):
        for n in (3, 5, 9, 31):
            cert = ctm_certificate(uniform_dataset(n, 2.0))
            assert np.allclose(cert.densities, 0.5)

    def test_errors(self):
        with pytest.raises(ZeroGap):
            ctm_certificate(load_dataset([0, 0, 1], 2.0))
        with pytest.raises(NotCTM):
            ctm_certificate(load_dataset([-1, -0.9, 0, 0.9, 1], 2.0))

    def test_random_ctm_certificates(self, rng):
        checked = 0
        while checked < 200:
            d = random_ctm(2 * int(rng.integers(1, 15)) + 1, 2.0, rng)
            if np.any(np.diff(d.array) <= 0):
                continue
            cert = ctm_certificate(d)
            assert verify_spm_certificate(d, cert, 1 / (d.n - 1))
            checked += 1

    def test_json_roundtrip(self, tmp_path):
        cert = ctm_certificate(load_dataset([-1, -0.2, 0, 0.2, 1], 2.0))
        path = tmp_path / "c.json"
        path.write_text(cert.to_json())
        assert read_certificate(path) == cert


class TestGenerators:
    def test_ctm_worst_example(self):
        assert ctm_worst(5, 1, 2.0).locations == (-1.0, 1.0, 1.0, 1.0, 1.0)

    def test_ctm_worst_shape(self):
        for n in (5, 11, 101):
            for k in range(n // 2 + 1):
                d = ctm_worst(n, k, 2.0)
                assert is_ctm(d)
                assert d.locations.count(1.0) == (n + 1) // 2 + k
                r = n // 2 - k
                assert d.locations[: r] == tuple(sorted(float(1 - Fraction(2 * i, r)) for i in range(1, r + 1)))

    def test_spm_worst_example(self):
        d = spm_worst(5, 0, 2.0, 0.3)
        assert d.locations[0] == -1.0
        assert d.locations[1] == pytest.approx(-1 + 2 / 3.5, abs=1e-15)
        assert d.locations[2:] == (1.0, 1.0, 1.0)

    def test_s_conventions(self):
        # s is the largest integer with s/n < lambda, or floor(lambda n) - 1
        assert spm_s_ceil(5, 0.3) == 1
        assert spm_s_ceil(10 * 1 + 1, 0.1) == 1
        assert spm_s_ceil(100 + 1, 0.1) == 10
        assert spm_s_floor(100 + 1, 0.1) == 9
        assert spm_s_ceil(20 + 1, 1 / 3) == 6

    def test_spm_worst_has_no_certificate(self, rng):
        # the c+k agents stacked at m/2 form a jump of more than 1/2 in the
        # empirical CDF, which no continuous CDF can track within lambda < 1/2
        d = spm_worst(11, 0, 2.0, 0.1)
        floor_ = d.locations.count(1.0) / d.n / 2
        assert floor_ > 0.1
        for _ in range(200):
            assert ks_distance(d, random_single_peaked(2.0, rng)) >= floor_ - 1e-12

    def test_impossibility_pair(self):
        a, b = impossibility_pair(3, 2.0)
        assert a.locations == (-1.0, -1.0, 1.0) and b.locations == (-1.0, 1.0, 1.0)
        assert change_one_distance(a, b) == 1
        assert (a.median, b.median) == (-1.0, 1.0)

    def test_fair_lb_pair_structure(self):
        for n, m, gamma in ((7, 6.0, 1.0), (13, 2.0, 1 / 6), (31, 3.0, 0.3), (101, 2.0, 0.1)):
            d0, dg = fair_lb_pair(n, m, gamma)
            h = round(gamma * (n - 1) / m)
            assert is_ctm(d0) and is_ctm(dg)
            assert d0.median == 0 and dg.median == pytest.approx(-gamma, abs=1e-12)
            assert dg.locations.count(dg.median) == 1 + 2 * h
            # D_gamma is reached from D_0 by moving 2h agents, not h
            diff = sum((Counter(d0.locations) - Counter(dg.locations)).values())
            assert change_one_distance(d0, dg) == diff == 2 * h

    def test_fair_lb_pair_hand_case(self):
        d0, dg = fair_lb_pair(7, 6.0, 1.0)
        assert d0.locations == (-3, -2, -1, 0, 1, 2, 3)
        assert dg.locations == (-3, -2, -1, -1, -1, 0, 1)

    @pytest.mark.parametrize("kw,match", [
        (dict(n=7, m=6.0, gamma=0.5), "multiple"),
        (dict(n=7, m=6.0, gamma=2.0), "m/3"),
        (dict(n=3, m=6.0, gamma=3.0), "odd integer >= 5"),
    ])
    def test_fair_lb_pair_constraints(self, kw, match):
        with pytest.raises(InvalidParams, match=match):
            fair_lb_pair(**kw)

    def test_spm_lb_pair(self):
        for n, m, lam in ((21, 2.0, 0.2), (101, 2.0, 0.1), (33, 33.0, 0.25), (1001, 2.0, 0.05)):
            d1, d2 = spm_lb_pair(n, m, lam)
            s = math.floor(lam * n) - 1
            c = (n + 1) // 2
            assert change_one_distance(d1, d2) == 1
            assert d1.median == pytest.approx(-m / 2 + (c - s) * m / n, abs=1e-15)
            assert d2.median == pytest.approx(-m / 2 + c * m / n, abs=1e-15)
            assert d2.median - d1.median == pytest.approx(s * m / n, rel=1e-12)
            unif = SinglePeakedDensity.uniform(m)
            assert ks_distance(d1, unif) <= s / n + 1e-12 <= lam
            assert verify_spm_certificate(d1, unif, lam) and verify_spm_certificate(d2, unif, lam)

    def test_spm_lb_gap_exact_on_dyadic_grid(self):
        # with m = n the grid is integer-valued, so the gap is exact
        d1, d2 = spm_lb_pair(33, 33.0, 0.25)
        s = math.floor(0.25 * 33) - 1
        assert d2.median - d1.median == s * 33.0 / 33

    def test_spm_lb_pair_needs_s(self):
        with pytest.raises(InvalidParams, match="s = "):
            spm_lb_pair(11, 2.0, 0.1)

    def test_dispatch(self):
        assert gen_adversarial("ctm-worst", n=5, k=1, m=2.0) == ctm_worst(5, 1, 2.0)
        with pytest.raises(InvalidParams, match="unknown"):
            gen_adversarial("nope", n=5)
        with pytest.raises(InvalidParams, match="k must"):
            gen_adversarial("ctm_worst", n=5, k=3, m=2.0)
        with pytest.raises(InvalidParams):
            gen_adversarial("ctm_worst", n=5, m=2.0)


class TestFamilyProperties:
    def test_ctm_collapse_rate(self, rng):
        for _ in range(500):
            n = 2 * int(rng.integers(1, 20)) + 1
            d = random_ctm(n, 2.0, rng)
            c = d.median_rank
            if c == 1:
                continue
            x = d.array
            for j in range(-(c - 1), c):
                assert abs(x[c - 1] - x[c - 1 + j]) <= abs(j) * d.m / (c - 1) + 1e-9

    def test_single_peaked_collapse(self, rng):
        for _ in range(200):
            p = random_single_peaked(2.0, rng)
            med = p.median()
            assert abs(med - p.peak) <= 1e-9
            grid = np.linspace(-1, 1, 100)
            lhs = np.abs(med - grid)
            rhs = 2 * 2.0 * np.abs(0.5 - p.cdf(grid))
            assert np.all(lhs <= rhs + 1e-9)


class TestSampling:
    def test_dkw_radius(self):
        n = 1001
        lam = dkw_radius(n, 0.01)
        assert lam == pytest.approx(math.sqrt(math.log(2 / 0.01) / (2 * n)))
        assert dkw_bound(n, lam) == pytest.approx(0.01)
        fails = 0
        for t in range(1000):
            d = sample_from_density(UNIFORM, n, 5, t)
            fails += ks_distance(d, UNIFORM) > lam
        assert fails <= 10

    def test_narrow_piece(self):
        p = SinglePeakedDensity((0.3, 0.3 + 1e-6), (1e6,), 0.3 + 5e-7)
        d = sample_from_density(p, 101, 1, 0, m=2.0)
        assert all(0.3 <= x <= 0.3 + 1e-6 for x in d.locations)

    def test_deterministic(self):
        a = sample_from_density(UNIFORM, 21, 9, 4)
        assert a == sample_from_density(UNIFORM, 21, 9, 4)
        assert a != sample_from_density(UNIFORM, 21, 9, 5)
        assert list(a.locations) == sorted(a.locations)

    def test_even_n(self):
        with pytest.raises(InvalidParams):
            sample_from_density(UNIFORM, 4, 0, 0)


def test_dkw_bound():
    assert dkw_bound(10, 0.0) == 1.0
    assert dkw_bound(100, 0.1359) == pytest.approx(2 * math.exp(-2 * 100 * 0.1359 ** 2))
    assert dkw_bound(100, 0.1359) == pytest.approx(0.0497, abs=1e-4)
    vals = [dkw_bound(n, 0.05) for n in (10, 100, 1000, 10000, 100000)]
    assert vals[:2] == [1.0, 1.0]
    assert all(b < a for a, b in zip(vals[1:], vals[2:]))
    assert vals[-1] < 1e-100


def test_decimal_parameters_read_exactly():
    # 0.3 * 10 is exactly 3 when read as a decimal (binary 0.3 gives 2.99...)
    assert spm_s_floor(10, 0.3) == 2
    assert spm_s_ceil(10, 0.3) == 2
    assert spm_s_ceil(10 + 1, 0.3) == 3
    assert spm_s_floor(25, 0.2) == 4
