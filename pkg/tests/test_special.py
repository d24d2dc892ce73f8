import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigenwave.special import (
    FACTORIALS,
    exp1,
    gaussian_q,
    inverse_q,
    jmath,
    jmath_shifted,
    lower_inc_gamma_int,
    upper_inc_gamma_int,
)

from _oracles import log_laplace_tail, normal_tail

# mpmath quadrature, 40 digits
E1_AT_1 = 0.21938393439552027368
Q_AT_4_7534 = 1.0001202950935643e-06
INV_Q_1E3 = 3.0902323061678135
INV_Q_1E6 = 4.7534243088228989
LOWER_4_2 = 0.85725923700871770803
JMATH_2_1 = 0.58726337556696259527
JSHIFT_2_HALF_HALF = 0.53568172943433103655


class TestGaussianQ:
    def test_half_at_zero(self):
        assert gaussian_q(0.0) == 0.5

    def test_tail_value(self):
        assert gaussian_q(4.7534) == pytest.approx(Q_AT_4_7534, rel=1e-12)

    def test_far_tail_underflows(self):
        assert gaussian_q(40.0) < 1e-300

    @pytest.mark.parametrize("x", [-8.0, -3.3, -0.5, 0.25, 1.0, 2.5, 5.0, 7.9])
    def test_against_quadrature(self, x):
        assert gaussian_q(x) == pytest.approx(float(normal_tail(x)), rel=1e-12)

    def test_strictly_decreasing_on_grid(self):
        # strict only where Q is not within an ulp of 1
        values = [gaussian_q(-8 + 0.01 * j) for j in range(1601)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        tail = values[300:]
        assert all(a > b for a, b in zip(tail, tail[1:]))

    @given(st.floats(-8, 8))
    def test_symmetry(self, x):
        assert gaussian_q(x) + gaussian_q(-x) == pytest.approx(1.0, abs=1e-15)

    def test_chernoff_domination(self):
        for j in range(101):
            x = 0.1 * j
            assert gaussian_q(x) <= 0.5 * math.exp(-0.5 * x * x)


class TestInverseQ:
    def test_half(self):
        assert inverse_q(0.5) == 0.0

    @pytest.mark.parametrize("p, expected", [(1e-3, INV_Q_1E3), (1e-6, INV_Q_1E6)])
    def test_values(self, p, expected):
        assert inverse_q(p) == pytest.approx(expected, rel=1e-12)

    @given(st.floats(1e-300, 0.5, exclude_min=True))
    def test_round_trip(self, p):
        assert gaussian_q(inverse_q(p)) == pytest.approx(p, rel=1e-10)

    @pytest.mark.parametrize("p", [0.0, -0.1, 0.50001, 1.0])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            inverse_q(p)


class TestIncompleteGamma:
    @given(st.floats(0, 700))
    def test_order_one_is_exponential(self, x):
        assert upper_inc_gamma_int(1, x) == pytest.approx(math.exp(-x), rel=1e-14, abs=1e-300)

    def test_zero_argument_is_factorial(self):
        assert upper_inc_gamma_int(3, 0.0) == 2.0

    def test_exponential_integral(self):
        assert upper_inc_gamma_int(0, 1.0) == pytest.approx(E1_AT_1, rel=1e-13)

    @pytest.mark.parametrize("x", [1e-8, 0.01, 0.3, 0.999, 1.0, 1.5, 7.0, 40.0, 300.0])
    def test_exp1_against_mpmath(self, x):
        assert exp1(x) == pytest.approx(float(mp.e1(x)), rel=1e-12)

    def test_order_zero_at_zero_diverges(self):
        with pytest.raises(ValueError):
            upper_inc_gamma_int(0, 0.0)

    def test_lower_values(self):
        assert lower_inc_gamma_int(4, 2.0) == pytest.approx(LOWER_4_2, rel=1e-13)
        assert lower_inc_gamma_int(3, 0.0) == 0.0
        for x in (0.0, 0.2, 3.0, 50.0):
            assert lower_inc_gamma_int(1, x) == pytest.approx(-math.expm1(-x), rel=1e-14, abs=0)

    @given(st.integers(1, 60), st.floats(0, 200))
    def test_complementarity(self, q, x):
        total = lower_inc_gamma_int(q, x) + upper_inc_gamma_int(q, x)
        assert total == pytest.approx(FACTORIALS[q - 1], rel=1e-12)

    @pytest.mark.parametrize("q", [1, 2, 5, 13, 30])
    @pytest.mark.parametrize("x", [1e-6, 0.05, 0.7, 4.0, 25.0, 90.0])
    def test_against_mpmath(self, q, x):
        assert upper_inc_gamma_int(q, x) == pytest.approx(
            float(mp.gammainc(q, x, mp.inf)), rel=1e-12)
        assert lower_inc_gamma_int(q, x) == pytest.approx(
            float(mp.gammainc(q, 0, x)), rel=1e-12)

    @settings(max_examples=50)
    @given(st.integers(1, 40), st.floats(0, 100), st.floats(0, 100))
    def test_lower_nondecreasing(self, q, a, b):
        lo, hi = sorted((a, b))
        assert lower_inc_gamma_int(q, lo) <= lower_inc_gamma_int(q, hi) * (1 + 1e-14)


class TestJmath:
    def test_order_one(self):
        assert jmath(1, 1.0) == pytest.approx(E1_AT_1, rel=1e-13)

    def test_order_two(self):
        assert jmath(2, 1.0) == pytest.approx(JMATH_2_1, rel=1e-13)

    @pytest.mark.parametrize("q", range(1, 13))
    @pytest.mark.parametrize("x", [0.05, 0.5, 5.0])
    def test_against_quadrature(self, q, x):
        assert jmath(q, x) == pytest.approx(float(log_laplace_tail(q, x)), rel=1e-9)

    @given(st.integers(1, 30), st.floats(1e-3, 300))
    def test_nonnegative(self, q, x):
        assert jmath(q, x) >= 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            jmath(2, 0.0)
        with pytest.raises(ValueError):
            jmath(0, 1.0)


class TestJmathShifted:
    @pytest.mark.parametrize("n", [1, 3, 7])
    def test_delta_one_drops_log(self, n):
        y = 0.8
        expected = FACTORIALS[n - 1] * math.fsum(
            upper_inc_gamma_int(k, y) / FACTORIALS[k] for k in range(n))
        assert jmath_shifted(n, y, 1.0) == pytest.approx(expected, rel=1e-15)

    def test_reduces_to_jmath(self):
        assert jmath_shifted(1, 1.0, 1.0) == pytest.approx(E1_AT_1, rel=1e-13)

    def test_value(self):
        assert jmath_shifted(2, 0.5, 0.5) == pytest.approx(JSHIFT_2_HALF_HALF, rel=1e-12)

    @pytest.mark.parametrize("n", range(1, 13))
    @pytest.mark.parametrize("y", [0.05, 0.5, 5.0])
    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
    def test_against_quadrature(self, n, y, delta):
        expected = mp.mpf(y) ** n * log_laplace_tail(n, y, delta)
        assert jmath_shifted(n, y, delta) == pytest.approx(float(expected), rel=1e-9)

    def test_order_zero_rejected(self):
        with pytest.raises(ValueError):
            jmath_shifted(0, 1.0, 0.5)

    @pytest.mark.parametrize("delta", [0.0, 1.5])
    def test_delta_domain(self, delta):
        with pytest.raises(ValueError):
            jmath_shifted(2, 1.0, delta)
