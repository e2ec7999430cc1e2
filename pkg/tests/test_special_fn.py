import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from batchcode.special_fn import (
    batch_from_m_normal_approx,
    gamma_pq,
    gamma_pq_array,
    harmonic,
    inverse_gamma_p,
    order_stat_cdf,
    order_stat_sf,
    poisson_log_pmf,
    regularized_gamma_p,
    regularized_gamma_q,
    std_normal_cdf,
    std_normal_quantile,
)


def mp_gamma_p(b, m):
    with mpmath.workdps(40):
        return float(mpmath.gammainc(b, 0, m, regularized=True))


def bisect_root(R, b):
    """Plain bisection on the mpmath P(b, .) -- independent of the Newton solver."""
    lo, hi = 0.0, 1.0
    while mp_gamma_p(b, hi) < R:
        hi *= 2
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mp_gamma_p(b, mid) < R:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestGammaP:
    def test_examples(self):
        assert regularized_gamma_p(1, math.log(2)) == pytest.approx(0.5, abs=1e-15)
        for b in (1, 2, 7, 1000):
            assert regularized_gamma_p(b, 0.0) == 0.0
        # 1 - e^{-1}(1 + 1)
        assert regularized_gamma_p(2, 1.0) == pytest.approx(0.2642411176571153, abs=1e-15)

    def test_rejects(self):
        with pytest.raises(ValueError):
            regularized_gamma_p(0, 1.0)
        with pytest.raises(ValueError):
            regularized_gamma_p(3, -0.1)
        with pytest.raises(ValueError):
            regularized_gamma_p(2.5, 1.0)

    @pytest.mark.parametrize("b", [1, 2, 3, 5, 10, 37, 100, 500, 1000])
    def test_against_mpmath(self, b):
        for m in [1e-4, 0.3, 1.0, b / 2, b - 1, b, b + 0.5, b + 3 * math.sqrt(b), 2 * b + 5, 5 * b + 20]:
            if m <= 0:
                continue
            assert abs(regularized_gamma_p(b, m) - mp_gamma_p(b, m)) <= 1e-12

    @pytest.mark.parametrize("b", [10**4, 10**5, 10**6])
    def test_large_shape_against_scipy(self, b):
        for m in [0.9 * b, b - math.sqrt(b), b, b + math.sqrt(b), 1.1 * b]:
            assert abs(regularized_gamma_p(b, m) - special.gammainc(b, m)) <= 1e-12

    def test_complement_keeps_precision(self):
        q = regularized_gamma_q(5, 200.0)
        with mpmath.workdps(40):
            ref = float(mpmath.gammainc(5, 200, mpmath.inf, regularized=True))
        assert q == pytest.approx(ref, rel=1e-12)
        assert q < 1e-70

    @given(b=st.integers(1, 300), m=st.floats(0, 600))
    def test_recurrence(self, b, m):
        # P(b+1, m) = P(b, m) - e^{-m} m^b / b!
        pmf = math.exp(poisson_log_pmf(b, m)) if m > 0 else 0.0
        assert abs(regularized_gamma_p(b + 1, m) - (regularized_gamma_p(b, m) - pmf)) <= 1e-12

    def test_monotone_grids(self):
        ms = np.linspace(0.01, 60, 400)
        # Strictness is checked on whichever tail is summed directly; the
        # other one saturates at 1 in floating point.
        for b in (1, 4, 20, 50):
            pq = [gamma_pq(b, m) for m in ms]
            assert all(x[0] <= y[0] for x, y in zip(pq, pq[1:]))
            assert all(x[1] > y[1] for x, y in zip(pq, pq[1:]) if x[0] > 0.5)
            assert all(x[0] < y[0] for x, y in zip(pq, pq[1:]) if y[0] <= 0.5)
        for m in (0.5, 3.0, 25.0):
            pq = [gamma_pq(b, m) for b in range(1, 80)]
            assert all(x[0] >= y[0] for x, y in zip(pq, pq[1:]))
            assert all(x[0] > y[0] for x, y in zip(pq, pq[1:]) if x[0] <= 0.5 and x[0] > 0)
            assert all(x[1] < y[1] for x, y in zip(pq, pq[1:]) if x[0] > 0.5)

    @pytest.mark.parametrize("b", [1, 3, 40, 257])
    def test_array_matches_scalar(self, b):
        m = np.linspace(0, 4 * b + 30, 801)
        p, q = gamma_pq_array(b, m)
        for i in range(0, len(m), 7):
            ps, qs = gamma_pq(b, float(m[i]))
            assert p[i] == pytest.approx(ps, abs=2e-16)
            assert q[i] == pytest.approx(qs, abs=2e-16)


class TestInverse:
    def test_closed_forms(self):
        assert inverse_gamma_p(0.5, 1) == pytest.approx(math.log(2), rel=1e-15)
        assert inverse_gamma_p(1 - math.exp(-2), 1) == pytest.approx(2.0, rel=1e-14)

    def test_against_bisection_oracle(self):
        assert inverse_gamma_p(0.7, 5) == pytest.approx(bisect_root(0.7, 5), abs=1e-10)
        assert inverse_gamma_p(0.05, 60) == pytest.approx(bisect_root(0.05, 60), abs=1e-9)

    @pytest.mark.parametrize("R", [0.0, 1.0, -0.2, 1.3])
    def test_rejects(self, R):
        with pytest.raises(ValueError):
            inverse_gamma_p(R, 3)

    def test_huge_shape(self):
        m = inverse_gamma_p(0.3, 10**6)
        assert abs(special.gammainc(10**6, m) - 0.3) <= 1e-10

    @given(R=st.floats(1e-6, 1 - 1e-6), b=st.integers(1, 2000))
    def test_roundtrip_property(self, R, b):
        assert abs(regularized_gamma_p(b, inverse_gamma_p(R, b)) - R) <= 1e-10


class TestNormal:
    def test_examples(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_quantile(0.5) == 0.0
        oracle = 0.5 * (1 + math.erf(1.959964 / math.sqrt(2)))
        assert std_normal_cdf(1.959964) == pytest.approx(oracle, abs=1e-14)
        assert std_normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)

    @pytest.mark.parametrize("p", [0.0, 1.0, -1e-3, 2.0])
    def test_quantile_rejects(self, p):
        with pytest.raises(ValueError):
            std_normal_quantile(p)

    def test_inverse_pair(self):
        for p in np.concatenate([np.geomspace(1e-8, 0.5, 200), 1 - np.geomspace(1e-8, 0.5, 200)]):
            assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-10


class TestNormalApprox:
    def test_examples(self):
        assert batch_from_m_normal_approx(3.7, 0.5) == pytest.approx(4.7, abs=1e-15)
        z = std_normal_quantile(0.025)
        assert batch_from_m_normal_approx(4, 0.975) == pytest.approx(2 * z + 5, abs=1e-15)
        assert batch_from_m_normal_approx(4, 0.975) == pytest.approx(1.08007, abs=1e-5)

    def test_consistency_b50(self):
        m = inverse_gamma_p(0.3, 50)
        assert abs(batch_from_m_normal_approx(m, 0.3) - 50) <= 2


def brute_order_cdf(k, n, F):
    return sum(math.comb(n, j) * F**j * (1 - F) ** (n - j) for j in range(k, n + 1))


class TestOrderStats:
    def test_examples(self):
        for F in (0.0, 0.2, 0.77, 1.0):
            assert order_stat_cdf(1, 6, F) == pytest.approx(1 - (1 - F) ** 6, abs=1e-15)
            assert order_stat_cdf(6, 6, F) == pytest.approx(F**6, abs=1e-15)

    def test_two_of_three_by_enumeration(self):
        # P(at least two of three fair coins below threshold)
        hits = sum(1 for bits in itertools.product([0, 1], repeat=3) if sum(bits) >= 2)
        assert order_stat_cdf(2, 3, 0.5) == pytest.approx(hits / 8, abs=1e-15)

    @pytest.mark.parametrize("k,n", [(0, 3), (4, 3), (1, 0)])
    def test_rejects(self, k, n):
        with pytest.raises(ValueError):
            order_stat_cdf(k, n, 0.5)

    @given(n=st.integers(1, 40), data=st.data())
    def test_against_exact_sum(self, n, data):
        k = data.draw(st.integers(1, n))
        F = data.draw(st.fractions(0, 1, max_denominator=97))
        exact = float(sum(math.comb(n, j) * F**j * (1 - F) ** (n - j) for j in range(k, n + 1)))
        assert order_stat_cdf(k, n, float(F)) == pytest.approx(exact, abs=1e-13)
        assert order_stat_sf(k, n, float(1 - F)) == pytest.approx(1 - exact, abs=1e-13)

    def test_no_overflow_large_n(self):
        v = order_stat_cdf(5000, 10**4, 0.5)
        assert 0.49 < v < 0.51
        assert np.isfinite(order_stat_cdf(1, 10**4, 1e-6))

    @given(n=st.integers(2, 60), data=st.data())
    def test_monotone(self, n, data):
        k = data.draw(st.integers(1, n - 1))
        F = data.draw(st.floats(0, 1))
        G = data.draw(st.floats(0, 1))
        lo, hi = min(F, G), max(F, G)
        assert order_stat_cdf(k, n, lo) <= order_stat_cdf(k, n, hi) + 1e-15
        assert order_stat_cdf(k + 1, n, F) <= order_stat_cdf(k, n, F) + 1e-15
        # more draws at the same k: more chances to be below
        assert order_stat_cdf(k, n, F) <= order_stat_cdf(k, n + 1, F) + 1e-15


class TestHarmonic:
    def test_values(self):
        assert harmonic(1) == 1
        assert harmonic(2) == 1.5
        assert harmonic(4) == pytest.approx(float(Fraction(25, 12)), abs=1e-15)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            harmonic(0)
