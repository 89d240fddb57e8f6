"""Symbolic h_k / g_k derivation and numeric series evaluation."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otdenoise.analytic_models import hermite
from otdenoise.expansion import (
    ScoreRatioPoly,
    closed_form_h,
    derive_g_sequence,
    derive_h_sequence,
    dump_polynomials,
    evaluate_series,
    g_series,
    h_series,
    verify_recursion_residual,
)

G = lambda m: ScoreRatioPoly.ratio(m, "G")  # noqa: E731
F = lambda m: ScoreRatioPoly.ratio(m, "F")  # noqa: E731


def displayed_h():
    """h_1..h_4 exactly as displayed (each in terms of the earlier h's)."""
    h1 = G(2)
    h2 = -G(4) + 2 * G(3) * h1 - G(2) * h1**2
    h3 = G(6) - 3 * G(5) * h1 + 3 * G(4) * h1**2 + 3 * G(3) * h2 - G(3) * h1**3 - 3 * G(2) * h1 * h2
    h4 = (-G(8) + 4 * G(7) * h1 - 6 * G(6) * h1**2 - 6 * G(5) * h2 + 4 * G(5) * h1**3
          + 12 * G(4) * h1 * h2 + 4 * G(3) * h3 - G(4) * h1**4 - 6 * G(3) * h1**2 * h2
          - G(2) * (4 * h1 * h3 + 3 * h2**2))
    return [h1, h2, h3, h4]


def displayed_g():
    g1 = F(2)
    g2 = -F(2) * g1**2 + F(4)
    g3 = -F(2) * (3 * g1 * g2) - F(3) * g1**3 + F(6)
    g4 = -F(2) * (4 * g1 * g3 + 3 * g2**2) - F(3) * (6 * g1**2 * g2) - F(4) * g1**4 + F(8)
    return [g1, g2, g3, g4]


def gaussian_ratios(y, var, M):
    """r_m = q^{(m-1)}/q for N(0, var): (-1)^{m-1} He_{m-1}(y/s) / s^{m-1}."""
    s = math.sqrt(var)
    return [None] + [(-1) ** (m - 1) * hermite(m - 1, y / s) / s ** (m - 1) for m in range(1, M + 1)]


class TestPolynomialAlgebra:
    def test_r1_is_one(self):
        assert G(1) == ScoreRatioPoly.constant(1)
        assert G(1) * G(3) == G(3)

    def test_canonical_equality(self):
        a = G(2) * G(3) + G(4)
        b = G(4) + G(3) * G(2)
        assert a == b and hash(a) == hash(b)
        assert (a - b).is_zero()

    def test_sides_do_not_mix(self):
        with pytest.raises((ValueError, TypeError)):
            _ = G(2) + F(2)

    def test_str(self):
        h2 = derive_h_sequence(2)[1]
        assert str(h2) == "-r4 + 2*r2*r3 - r2^3"

    def test_json_round_trip(self):
        for p in derive_h_sequence(4):
            back = ScoreRatioPoly.from_json(json.loads(json.dumps(p.to_json())), "G")
            assert back == p

    def test_missing_ratio_raises(self):
        with pytest.raises(KeyError, match="r_4"):
            derive_h_sequence(2)[1].evaluate({2: 1.0, 3: 1.0})

    def test_coefficients_are_exact(self):
        for p in derive_h_sequence(5) + derive_g_sequence(5):
            assert all(isinstance(c, Fraction) for _, c in p.items())


class TestDisplayedFormulas:
    def test_h_matches_display(self):
        assert list(derive_h_sequence(4)) == displayed_h()

    def test_g_matches_display(self):
        assert list(derive_g_sequence(4)) == displayed_g()

    def test_h2_expanded(self):
        assert derive_h_sequence(2)[1] == -G(4) + 2 * G(2) * G(3) - G(2) ** 3

    def test_h3_expanded(self):
        expected = (G(6) - 3 * G(2) * G(5) - 3 * G(3) * G(4) + 6 * G(2) ** 2 * G(4)
                    + 6 * G(2) * G(3) ** 2 - 10 * G(2) ** 3 * G(3) + 3 * G(2) ** 5)
        assert derive_h_sequence(3)[2] == expected

    def test_g2_g3_expanded(self):
        g = derive_g_sequence(3)
        assert g[1] == F(4) - F(2) ** 3
        assert g[2] == F(6) - 3 * F(2) ** 2 * F(4) - F(2) ** 3 * F(3) + 3 * F(2) ** 5


class TestRecursion:
    @pytest.mark.parametrize("k", range(1, 7))
    def test_residual_vanishes(self, k):
        hs = derive_h_sequence(6)
        assert verify_recursion_residual(hs, k).is_zero()

    def test_perturbed_residual_is_nonzero(self):
        hs = list(derive_h_sequence(3))
        hs[2] = hs[2] + G(2)
        assert not verify_recursion_residual(hs, 3).is_zero()

    @pytest.mark.parametrize("k", range(1, 7))
    def test_closed_form_agrees(self, k):
        hs = derive_h_sequence(6)
        assert closed_form_h(k, hs) == hs[k - 1]

    @pytest.mark.parametrize("k", range(1, 7))
    def test_grading(self, k):
        # each monomial prod r_{m_i} has sum (m_i - 1) = 2k - 1
        assert derive_h_sequence(6)[k - 1].gradings() == {2 * k - 1}
        assert derive_g_sequence(6)[k - 1].gradings() == {2 * k - 1}

    @pytest.mark.parametrize("k", range(1, 7))
    def test_max_index(self, k):
        assert derive_h_sequence(6)[k - 1].max_index() == 2 * k
        assert derive_g_sequence(6)[k - 1].max_index() == 2 * k

    def test_order_bounds(self):
        with pytest.raises(ValueError):
            derive_h_sequence(0)
        with pytest.raises(ValueError):
            derive_h_sequence(7)
        assert len(derive_h_sequence(7, max_order=7)) == 7


class TestGaussianOracle:
    """For N(0, v) observations the map y * sqrt(1 - 2 eta / v) is linear, so
    ``h_k(y) = k! binom(1/2, k) (-2/v)^k y``; for N(0, t2) signals
    ``g_k(y) = k! binom(-1/2, k) (2/t2)^k y``."""

    @staticmethod
    def _binom(a, k):
        out = Fraction(1)
        for i in range(k):
            out *= (a - i) / Fraction(i + 1)
        return out

    @pytest.mark.parametrize("k", range(1, 7))
    @pytest.mark.parametrize("y,v", [(0.7, 1.0), (-1.3, 2.5), (0.2, 0.4)])
    def test_h_on_gaussian(self, k, y, v):
        h = derive_h_sequence(6)[k - 1].evaluate(gaussian_ratios(y, v, 12))
        expected = math.factorial(k) * float(self._binom(Fraction(1, 2), k)) * (-2 / v) ** k * y
        assert h == pytest.approx(expected, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("k", range(1, 7))
    @pytest.mark.parametrize("y,t2", [(0.7, 1.0), (-1.3, 2.5)])
    def test_g_on_gaussian(self, k, y, t2):
        g = derive_g_sequence(6)[k - 1].evaluate(gaussian_ratios(y, t2, 12))
        expected = math.factorial(k) * float(self._binom(Fraction(-1, 2), k)) * (2 / t2) ** k * y
        assert g == pytest.approx(expected, rel=1e-9, abs=1e-12)


class TestSeriesEvaluation:
    def test_identity_order_zero(self):
        s = h_series(0)
        assert evaluate_series(s, {}, 0.1, 1.5) == 1.5
        assert s.required_ratios() == 1

    def test_first_order_is_half_tweedie(self):
        y = np.linspace(-2, 2, 9)
        r = gaussian_ratios(y, 1.0, 2)
        np.testing.assert_allclose(evaluate_series(h_series(1), r, 0.05, y), y - 0.05 * y)

    def test_vectorized_matches_scalar(self):
        ys = np.array([-1.0, 0.3, 2.0])
        r = gaussian_ratios(ys, 1.3, 6)
        vec = evaluate_series(h_series(3), r, 0.02, ys)
        for i, y in enumerate(ys):
            rs = gaussian_ratios(y, 1.3, 6)
            assert vec[i] == pytest.approx(evaluate_series(h_series(3), rs, 0.02, y), rel=1e-14)

    def test_negative_eta_rejected(self):
        with pytest.raises(ValueError):
            evaluate_series(h_series(1), gaussian_ratios(0.0, 1.0, 2), -0.1, 0.0)

    def test_required_ratios(self):
        assert h_series(3).required_ratios() == 6
        assert g_series(2).required_ratios() == 4

    @given(st.floats(-3, 3), st.floats(0.001, 0.05))
    @settings(max_examples=30, deadline=None)
    def test_hierarchy_converges_on_gaussian(self, y, eta):
        v = 1.0 + 2 * eta
        r = gaussian_ratios(y, v, 12)
        exact = y * math.sqrt(1 - 2 * eta / v)
        errs = [abs(evaluate_series(h_series(K), r, eta, y) - exact) for K in range(0, 5)]
        bound = abs(y) * (2 * eta / v) ** np.arange(1, 6)
        assert all(e <= b + 1e-15 for e, b in zip(errs, bound))


class TestDump:
    def test_dump_is_json(self):
        d = json.loads(dump_polynomials(3))
        assert set(d) >= {"h", "g", "text"}
        assert d["text"]["h"][1] == "-r4 + 2*r2*r3 - r2^3"
        back = ScoreRatioPoly.from_json(d["h"]["3"], "G")
        assert back == derive_h_sequence(3)[2]
