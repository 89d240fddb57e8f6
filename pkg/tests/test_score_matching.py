"""Higher-order score matching over Legendre and cubic-spline classes."""

import json
import math
import warnings

import numpy as np
import pytest

from otdenoise.analytic_models import GaussianMixtureModel, score_derivatives
from otdenoise.score_estimation import SampleSet
from otdenoise.score_matching import (
    BasisSpec,
    FittedScore,
    evaluate_fitted,
    fit_score,
    score_matching_objective,
    score_matching_risk,
)

STD = GaussianMixtureModel.gaussian(0.0, 1.0)
MIX = GaussianMixtureModel([0.4, 0.6], [-0.8, 0.7], [0.6, 0.7])
# wide enough that the density at the ends is ~1e-14 (vanishing boundary terms)
LEG3 = BasisSpec("legendre", 3, (-8.0, 8.0))


@pytest.fixture(scope="module")
def big_sample():
    return SampleSet.draw(STD, 100_000, 17)


def _power_coeffs(f, deg=3):
    y = np.linspace(-2, 2, 41)
    return np.polynomial.polynomial.polyfit(y, f(y), deg)


class TestBasis:
    def test_dims(self):
        assert LEG3.dim == 4 and LEG3.max_derivative == 3
        spl = BasisSpec("cubic-spline", 5, (-1, 1))
        assert spl.dim == 9 and spl.max_derivative == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            BasisSpec("fourier", 3, (0, 1))
        with pytest.raises(ValueError):
            BasisSpec("legendre", 3, (1, 1))

    def test_legendre_derivatives_exact(self):
        y = np.linspace(-7, 7, 15)
        h = 1e-5
        for d in (1, 2):
            fd = (LEG3.design(y + h, d - 1) - LEG3.design(y - h, d - 1)) / (2 * h)
            np.testing.assert_allclose(LEG3.design(y, d), fd, atol=1e-6)

    def test_spline_partition_of_unity(self):
        spl = BasisSpec("cubic-spline", 6, (-2, 3))
        y = np.linspace(-2, 3, 101)
        np.testing.assert_allclose(spl.design(y).sum(axis=1), 1.0, atol=1e-14)
        np.testing.assert_allclose(spl.design(y, 1).sum(axis=1), 0.0, atol=1e-12)


class TestEvaluate:
    def test_zero_coeffs(self):
        f = FittedScore(LEG3, 1, np.zeros(4), 1.0)
        np.testing.assert_array_equal(evaluate_fitted(f, np.linspace(-8, 8, 9)), 0.0)

    def test_single_basis_function(self):
        c = np.zeros(4)
        c[2] = 1.0
        f = FittedScore(LEG3, 1, c, 1.0)
        y = np.array([-4.0, 1.0, 6.0])
        u = y / 8
        np.testing.assert_allclose(f(y), 0.5 * (3 * u**2 - 1), rtol=1e-14)

    def test_errors(self):
        f = FittedScore(LEG3, 1, np.zeros(4), 1.0)
        with pytest.raises(ValueError):
            evaluate_fitted(f, 8.5)
        with pytest.raises(ValueError):
            evaluate_fitted(f, 0.0, derivative=4)

    def test_json_round_trip(self, big_sample):
        f = fit_score(big_sample, 1, LEG3)
        g = FittedScore.from_json(f.to_json())
        np.testing.assert_array_equal(g.coeffs, f.coeffs)
        assert g.basis == f.basis and g.order == 1
        json.loads(f.to_json())


class TestGaussianFits:
    def test_first_order_is_minus_y(self, big_sample):
        f = fit_score(big_sample, 1, LEG3)
        c = _power_coeffs(f)
        assert c[1] == pytest.approx(-1.0, abs=0.03)
        np.testing.assert_allclose(c[[0, 2, 3]], 0.0, atol=0.03)

    def test_second_order_is_he2(self, big_sample):
        f = fit_score(big_sample, 2, LEG3)
        c = _power_coeffs(f)
        np.testing.assert_allclose(c, [-1.0, 0.0, 1.0, 0.0], atol=0.1)
        assert f(0.0, 2) == pytest.approx(2.0, abs=0.1)

    @pytest.mark.parametrize("m,power,target", [(1, 1, -1.0), (2, 2, 1.0), (2, 0, -1.0)])
    def test_monte_carlo_error_bar(self, m, power, target):
        # replicate fits: the leading coefficient within 3 standard errors of the truth
        coef = []
        for i in range(20):
            s = SampleSet.draw(STD, 5000, 5, (i,))
            coef.append(_power_coeffs(fit_score(s, m, LEG3))[power])
        coef = np.array(coef)
        assert abs(coef.mean() - target) < 3 * coef.std(ddof=1) / math.sqrt(20)

    def test_spline_reproduces_linear_score(self, big_sample):
        spl = BasisSpec("cubic-spline", 4, (-8.0, 8.0))
        f = fit_score(big_sample, 1, spl)
        y = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(f(y), -y, atol=0.05)

    def test_minimizer_beats_truth(self, big_sample):
        f = fit_score(big_sample, 1, LEG3, ridge=0.0)
        truth = FittedScore(LEG3, 1, np.array([0.0, -8.0, 0.0, 0.0]), 1.0)
        np.testing.assert_allclose(truth(np.array([1.0, -2.0])), [-1.0, 2.0])
        assert score_matching_objective(f, big_sample) <= score_matching_objective(truth, big_sample)


class TestLinearSystem:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_first_order_conditions(self, m):
        s = SampleSet.draw(MIX, 4000, 8)
        basis = BasisSpec("legendre", 6, MIX.window(8.0))
        f = fit_score(s, m, basis, ridge=1e-6)
        X = basis.design(s.values)
        A = X.T @ X / s.n
        b = basis.design(s.values, m).mean(axis=0)
        resid = A @ f.coeffs + (-1) ** (m + 1) * b + f.ridge * f.coeffs
        assert np.linalg.norm(resid) <= 1e-10 * np.linalg.norm(b)

    def test_default_ridge(self):
        s = SampleSet.draw(STD, 1000, 1)
        f = fit_score(s, 1, LEG3)
        X = LEG3.design(s.values)
        assert f.ridge == pytest.approx(1e-8 * np.trace(X.T @ X / s.n) / 4, rel=1e-12)

    def test_ill_conditioned_without_ridge(self):
        spl = BasisSpec("cubic-spline", 30, (-8.0, 8.0))
        data = np.random.default_rng(0).uniform(0.0, 0.1, 200)
        with pytest.raises(np.linalg.LinAlgError):
            fit_score(data, 1, spl, ridge=0.0)
        assert fit_score(data, 1, spl).gram_condition > 1e12

    def test_out_of_window_dropped(self):
        data = np.concatenate([np.linspace(-1, 1, 50), [9.0, -10.0]])
        with pytest.warns(UserWarning, match="dropped 2"):
            f = fit_score(data, 1, LEG3)
        assert f.n_dropped == 2 and f.n_used == 50

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_score([0.0, 1.0], 0, LEG3)
        with pytest.raises(ValueError):
            fit_score(np.linspace(-1, 1, 10), 3, BasisSpec("cubic-spline", 3, (-2, 2)))
        with pytest.raises(ValueError):
            fit_score([0.0, 0.5], 1, LEG3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(ValueError):
                fit_score([20.0, 30.0], 1, LEG3)


class TestRisk:
    @staticmethod
    def _truth(model, m):
        def f(y, d=0):
            return score_derivatives(model, m, d, y)[d]
        return f

    @pytest.mark.parametrize("m", [1, 2])
    def test_truth_has_zero_risk(self, m):
        rep = score_matching_risk(self._truth(MIX, m), MIX, m=m)
        assert rep.risk == 0.0
        assert abs(rep.excess_objective) < 1e-6

    @pytest.mark.parametrize("c", [0.1, -0.7, 2.0])
    def test_constant_shift(self, c):
        base = self._truth(MIX, 2)
        f = lambda y, d=0: base(y, d) + (c if d == 0 else 0.0)  # noqa: E731
        rep = score_matching_risk(f, MIX, m=2)
        assert rep.risk == pytest.approx(0.5 * c * c, rel=1e-7)
        assert rep.identity_gap < 1e-6

    def test_fitted_risk_small(self, big_sample):
        rep = score_matching_risk(fit_score(big_sample, 1, LEG3), STD)
        assert rep.risk < 1e-3
        assert rep.boundary_density < 1e-8
        assert rep.identity_gap < 1e-6

    def test_callable_needs_order(self):
        with pytest.raises(ValueError):
            score_matching_risk(lambda y, d=0: y, STD)
