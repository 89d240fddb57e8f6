"""Partial Bell polynomials: enumeration, coefficients, evaluation."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otdenoise.combinatorics import (
    apply_bell,
    bell_polynomial,
    enumerate_partitions,
    evaluate_bell,
)


def _stirling2(n, k):
    """Stirling numbers of the second kind from S(n,k) = k S(n-1,k) + S(n-1,k-1)."""
    table = [[0] * (k + 1) for _ in range(n + 1)]
    table[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, min(i, k) + 1):
            table[i][j] = j * table[i - 1][j] + table[i - 1][j - 1]
    return table[n][k]


def _lah(n, k):
    """Unsigned Lah numbers C(n-1, k-1) n!/k!, equal to B_{n,k}(1!, 2!, 3!, ...)."""
    return math.comb(n - 1, k - 1) * math.factorial(n) // math.factorial(k)


class TestKnownExpansions:
    def test_b42(self):
        # B_{4,2} = 4 x1 x3 + 3 x2^2
        terms = {t.multiplicities: t.coefficient for t in enumerate_partitions(4, 2)}
        assert terms == {(1, 0, 1): 4, (0, 2, 0): 3}

    def test_b32_at_2_5(self):
        # B_{3,2}(x1, x2) = 3 x1 x2 -> 30
        assert evaluate_bell(bell_polynomial(3, 2), [2.0, 5.0]) == 30.0

    def test_b_n1_and_b_nn(self):
        for n in range(1, 9):
            xs = [float(i + 2) for i in range(n)]
            assert evaluate_bell(bell_polynomial(n, 1), xs) == xs[n - 1]
            assert evaluate_bell(bell_polynomial(n, n), xs[:1]) == xs[0] ** n

    def test_edge_cases(self):
        assert len(enumerate_partitions(0, 0)) == 1
        assert enumerate_partitions(0, 0)[0].coefficient == 1
        assert enumerate_partitions(5, 0) == ()
        with pytest.raises(ValueError):
            enumerate_partitions(2, 3)
        with pytest.raises(ValueError):
            enumerate_partitions(-1, 0)

    def test_too_few_values(self):
        with pytest.raises(ValueError):
            evaluate_bell(bell_polynomial(4, 2), [1.0, 2.0])


class TestCombinatorialIdentities:
    @pytest.mark.parametrize("n", range(1, 11))
    def test_all_ones_gives_stirling(self, n):
        for k in range(1, n + 1):
            B = bell_polynomial(n, k)
            assert apply_bell(B, [1] * B.num_args) == _stirling2(n, k)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_factorials_give_lah(self, n):
        for k in range(1, n + 1):
            B = bell_polynomial(n, k)
            vals = [math.factorial(i + 1) for i in range(B.num_args)]
            assert apply_bell(B, vals) == _lah(n, k)

    @pytest.mark.parametrize("n", range(1, 10))
    def test_structure_of_terms(self, n):
        for k in range(1, n + 1):
            for t in enumerate_partitions(n, k):
                assert t.parts == k
                assert t.weight == n
                assert t.coefficient > 0

    def test_ordering_is_deterministic(self):
        a = [t.multiplicities for t in enumerate_partitions(8, 3)]
        assert a == sorted(a)

    def test_homogeneity(self):
        # B_{n,k}(a b x_1, a b^2 x_2, ...) = a^k b^n B_{n,k}(x)
        rng = np.random.default_rng(3)
        for n, k in [(5, 2), (6, 3), (7, 4)]:
            B = bell_polynomial(n, k)
            x = rng.uniform(-1, 1, B.num_args)
            a, b = 1.3, 0.7
            scaled = [a * b ** (i + 1) * x[i] for i in range(B.num_args)]
            assert evaluate_bell(B, scaled) == pytest.approx(a**k * b**n * evaluate_bell(B, x), rel=1e-12)


class TestExponentialFormula:
    """exp(u sum_j x_j t^j/j!) = sum_{n,k} B_{n,k}(x) u^k t^n / n!."""

    @pytest.mark.parametrize("j", [1, 2, 3])
    @pytest.mark.parametrize("eta", [0.05, 0.1])
    def test_power_of_series(self, j, eta):
        # (sum_{i>=1} x_i eta^i / i!)^j / j! = sum_n B_{n,j}(x) eta^n / n!
        rng = np.random.default_rng(10 * j)
        N = 40
        x = rng.uniform(-1, 1, N)
        s = sum(x[i - 1] * eta**i / math.factorial(i) for i in range(1, N + 1))
        lhs = s**j / math.factorial(j)
        rhs = math.fsum(
            evaluate_bell(bell_polynomial(n, j), x[: n - j + 1]) * eta**n / math.factorial(n)
            for n in range(j, 16)
        )
        assert abs(lhs - rhs) <= 1e-12

    @given(st.integers(1, 8), st.data())
    @settings(max_examples=40, deadline=None)
    def test_exact_rational_evaluation(self, n, data):
        k = data.draw(st.integers(1, n))
        B = bell_polynomial(n, k)
        vals = [Fraction(data.draw(st.integers(-5, 5)), data.draw(st.integers(1, 4)))
                for _ in range(B.num_args)]
        exact = apply_bell(B, vals, one=Fraction(1))
        assert isinstance(exact, Fraction)
        assert float(exact) == pytest.approx(evaluate_bell(B, [float(v) for v in vals]), rel=1e-12, abs=1e-12)
