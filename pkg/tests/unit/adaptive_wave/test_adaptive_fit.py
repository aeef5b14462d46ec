import math
import unittest

import numpy as np
import pytest

from adaptive_wave.adaptive_fit import (
    CurveModel,
    abs_prime,
    beta_eval,
    black_scholes_curve,
    fit_scalings,
    interior_minima,
    lm_fit,
    minima_near_strike,
    mixed_model,
    mixed_pdf,
    multi_start_fit,
    nls_greeks,
    numeric_jacobian,
    reference_values,
    seeded_init,
    shock_model,
    shock_pdf,
)
from adaptive_wave.errors import DomainError
from adaptive_wave.models import FitResult, MarketPotential, OptionSpec


def _exponential():
    return CurveModel("exp", ("a", "b"), lambda s, p: p[0] * np.exp(p[1] * s))


def _greek_cases(n=20, seed=2):
    rng = np.random.Generator(np.random.PCG64(seed))
    return [
        (rng.uniform(0.1, 0.5), rng.uniform(0.02, 0.1), rng.uniform(0.5, 2.0), rng.uniform(0.0, 2.0))
        for _ in range(n)
    ]


class TestDensities(unittest.TestCase):
    """Test cases for the fitted density families"""

    def test_beta_eval_constant_term(self):
        pot = MarketPotential(rate=0.05, terms=[(2.0, 100.0, 1.0)])
        self.assertAlmostEqual(beta_eval(10.0, pot), 0.1, places=14)
        self.assertIsInstance(beta_eval(10.0, pot), float)
        np.testing.assert_allclose(beta_eval(np.array([-10.0, 10.0]), pot), [-0.1, 0.1], rtol=1e-14)

    def test_mixed_reduces_to_shock(self):
        s = np.linspace(-5.0, 5.0, 101)
        np.testing.assert_allclose(
            mixed_pdf(s, 0.3, 0.05, 1.2, 0.5, 1.0, 0.0), shock_pdf(s, 0.3, 0.05, 1.2, 0.5), rtol=1e-14
        )

    def test_shock_vanishes_on_kink_line(self):
        self.assertEqual(float(shock_pdf(0.6, 0.5, 0.05, 1.2, 1.0)), 0.0)

    def test_models_expose_parameter_names(self):
        shock = shock_model(0.05, 2)
        self.assertEqual(shock.param_names, ("sigma", "k", "T", "w1_1", "w1_2", "w2_1", "w2_2", "w3_1", "w3_2"))
        self.assertEqual(mixed_model(0.05, 3).n_params, 5 + 9)

    def test_model_matches_direct_evaluation(self):
        s = np.linspace(50.0, 150.0, 11)
        params = np.array([0.3, 100.0, 0.5, 1.0, 2.0, 1.0, 2.0, 100.0, 100.0])
        pot = MarketPotential.from_columns(0.05, [1.0, 2.0], [1.0, 2.0], [100.0, 100.0])
        expected = shock_pdf(s, 0.3, beta_eval(s, pot), 100.0, 0.5)
        np.testing.assert_allclose(shock_model(0.05, 2)(s, params), expected, rtol=1e-14)


class TestLevenbergMarquardt(unittest.TestCase):
    """Test cases for the damped least-squares driver"""

    def setUp(self):
        self.s = np.linspace(0.0, 4.0, 41)
        self.target = (self.s, 2.0 * np.exp(-0.5 * self.s))

    def test_recovers_exact_parameters(self):
        result = lm_fit(_exponential(), self.target, [1.0, 0.1])
        self.assertTrue(result.converged, result.message)
        np.testing.assert_allclose(result.params, [2.0, -0.5], rtol=1e-6)
        self.assertLess(result.rmse, 1e-6)
        self.assertEqual(result.param_names, ["a", "b"])

    def test_loss_trace_is_non_increasing(self):
        result = lm_fit(_exponential(), self.target, [1.0, 0.1])
        trace = np.array(result.loss_trace)
        self.assertTrue(np.all(np.diff(trace) <= 0.0))
        initial = _exponential()(self.s, [1.0, 0.1]) - self.target[1]
        self.assertAlmostEqual(trace[0], float(initial @ initial), places=12)
        self.assertEqual(len(trace), result.iterations + 1)

    def test_iteration_limit(self):
        result = lm_fit(_exponential(), self.target, [1.0, 0.1], max_iter=1)
        self.assertFalse(result.converged)
        self.assertEqual(result.message, "maximum iterations reached")
        self.assertEqual(result.iterations, 1)

    def test_non_finite_start(self):
        model = CurveModel("bad", ("a", "b"), lambda s, p: np.full_like(s, np.nan))
        result = lm_fit(model, self.target, [1.0, 1.0])
        self.assertFalse(result.converged)
        self.assertEqual(result.rmse, math.inf)
        self.assertEqual(result.message, "initial parameters give a non-finite loss")

    def test_input_validation(self):
        with self.assertRaises(DomainError):
            lm_fit(_exponential(), self.target, [1.0, 0.1, 0.0])
        with self.assertRaises(DomainError):
            lm_fit(_exponential(), (self.s[:1], self.target[1][:1]), [1.0, 0.1])
        with self.assertRaises(DomainError):
            lm_fit(_exponential(), (self.s, self.target[1][:5]), [1.0, 0.1])

    def test_reference_is_recorded(self):
        result = lm_fit(_exponential(), self.target, [1.0, 0.1], reference={"strike": 100.0})
        self.assertEqual(result.reference, {"strike": 100.0})

    def test_multi_start_keeps_best(self):
        inits = [[1.0, 0.1], [2.0, -0.5]]
        best = multi_start_fit(_exponential(), self.target, inits, max_iter=2)
        single = lm_fit(_exponential(), self.target, [1.0, 0.1], max_iter=2)
        self.assertLessEqual(best.rmse, single.rmse)
        with self.assertRaises(DomainError):
            multi_start_fit(_exponential(), self.target, [])


class TestJacobian(unittest.TestCase):
    def test_linear_residual(self):
        matrix = np.array([[1.0, 2.0, 0.0], [0.5, -1.0, 3.0]])
        jac = numeric_jacobian(lambda p: matrix @ p, [1.0, 0.0, -2.0])
        np.testing.assert_allclose(jac, matrix, rtol=1e-7, atol=1e-8)

    def test_nonlinear_residual(self):
        p = np.array([0.7, 1.3])
        jac = numeric_jacobian(lambda q: np.array([q[0] ** 2, np.sin(q[0] * q[1])]), p)
        expected = [[2 * p[0], 0.0], [p[1] * np.cos(p[0] * p[1]), p[0] * np.cos(p[0] * p[1])]]
        np.testing.assert_allclose(jac, expected, rtol=1e-7, atol=1e-8)


class TestSeededInit(unittest.TestCase):
    """Test cases for the documented starting vectors"""

    def setUp(self):
        self.opt = OptionSpec(spot=100.0, strike=100.0, rate=0.05, volatility=0.3, maturity=1.0, dividend_yield=0.04)
        self.s = np.linspace(50.0, 150.0, 101)
        self.call = black_scholes_curve("call", self.opt, self.s)

    def _init(self, kind="shock", n_terms=5, seed=0, target=None):
        target = self.call if target is None else target
        return seeded_init(kind, self.s, target, 0.05, n_terms, seed, 0.3, 100.0)

    def test_shapes(self):
        self.assertEqual(self._init("shock", 5).shape, (3 + 15,))
        self.assertEqual(self._init("mixed", 4).shape, (5 + 12,))
        np.testing.assert_array_equal(self._init("mixed", 4)[3:5], [1.0, 0.0])

    def test_kink_is_placed_outside_window(self):
        init = self._init()
        self.assertAlmostEqual(init[0] * init[1] * init[2], 50.0 - 25.0, places=10)
        put = black_scholes_curve("put", self.opt, self.s)
        init = self._init(target=put)
        self.assertAlmostEqual(init[0] * init[1] * init[2], 150.0 + 25.0, places=10)
        init = seeded_init("shock", self.s, put, 0.05, 3, 0, 0.3, 100.0, kink_location=100.0)
        self.assertAlmostEqual(init[0] * init[1] * init[2], 100.0, places=10)

    def test_potential_is_positive_on_window(self):
        for seed in (0, 1, 2):
            init = self._init(seed=seed)
            w1, w2, w3 = init[3:].reshape(3, 5)
            pot = MarketPotential.from_columns(0.05, w1, w2, w3)
            self.assertTrue(np.all(beta_eval(self.s, pot) > 0.0), seed)
            np.testing.assert_array_equal(w3, 100.0)
            self.assertAlmostEqual(w2[0] / w3[0], 1.0, places=14)

    def test_reproducible_per_seed(self):
        np.testing.assert_array_equal(self._init(seed=4), self._init(seed=4))
        self.assertFalse(np.array_equal(self._init(seed=4), self._init(seed=5)))

    def test_fit_from_seed_does_not_increase_loss(self):
        model = shock_model(0.05, 3)
        result = lm_fit(model, (self.s, self.call), self._init(n_terms=3), max_iter=20)
        self.assertLessEqual(result.loss_trace[-1], result.loss_trace[0])
        self.assertTrue(all(np.isfinite(result.params)))

    def test_invalid_arguments(self):
        with self.assertRaises(DomainError):
            self._init("straddle")
        with self.assertRaises(DomainError):
            self._init(n_terms=0)


class TestCalibrationRegression(unittest.TestCase):
    """Reference calibrations on the s in [50, 150] window with seeds 0, 1, 2"""

    def setUp(self):
        self.opt = OptionSpec(spot=100.0, strike=100.0, rate=0.05, volatility=0.3, maturity=1.0, dividend_yield=0.04)
        self.s = np.linspace(50.0, 150.0, 201)

    def _fit(self, kind, model_kind, n_terms, kink_location=None):
        target = black_scholes_curve(kind, self.opt, self.s)
        build = shock_model if model_kind == "shock" else mixed_model
        inits = [
            seeded_init(model_kind, self.s, target, 0.05, n_terms, seed, 0.3, 100.0, kink_location)
            for seed in (0, 1, 2)
        ]
        result = multi_start_fit(build(0.05, n_terms), (self.s, target), inits, max_iter=100)
        fitted = build(0.05, n_terms)(self.s, result.params)
        return result, fitted, float(np.max(target))

    def test_call_fit_reaches_reference_rmse(self):
        result, _, curve_max = self._fit("call", "shock", 5)
        self.assertLessEqual(result.iterations, 100)
        # Reference run: 0.0031 of the curve maximum
        self.assertLess(result.rmse / curve_max, 0.005)

    def test_shock_put_fit_keeps_kink_near_strike(self):
        result, fitted, _ = self._fit("put", "shock", 3, kink_location=100.0)
        self.assertTrue(np.all(np.isfinite(fitted)))
        self.assertGreater(minima_near_strike(self.s, fitted, 100.0, half_width=15.0).size, 0)

    def test_mixed_put_fit_is_smooth_near_strike(self):
        result, fitted, curve_max = self._fit("put", "mixed", 3)
        self.assertEqual(minima_near_strike(self.s, fitted, 100.0).size, 0)
        self.assertLess(result.rmse / curve_max, 0.05)


class TestScalingsAndMinima(unittest.TestCase):
    def test_fit_scalings(self):
        opt = OptionSpec(spot=100.0, strike=100.0, rate=0.05, volatility=0.3, maturity=1.0)
        result = FitResult(
            params=[0.6, 50.0, -2.0],
            param_names=["sigma", "k", "T"],
            rmse=0.1,
            iterations=3,
            loss_trace=[1.0, 0.5],
            converged=True,
            reference=reference_values(opt),
        )
        ratios = fit_scalings(result)
        self.assertEqual(set(ratios), {"sigma_ratio", "k_ratio", "T_ratio"})
        self.assertAlmostEqual(ratios["sigma_ratio"], 2.0, places=14)
        self.assertAlmostEqual(ratios["k_ratio"], 0.5, places=14)
        self.assertAlmostEqual(ratios["T_ratio"], -2.0, places=14)

    def test_fit_scalings_needs_reference(self):
        result = FitResult(
            params=[0.6, 50.0, 1.0], param_names=["sigma", "k", "T"], rmse=0.0, iterations=0, loss_trace=[0.0], converged=True
        )
        with self.assertRaises(DomainError):
            fit_scalings(result)

    def test_interior_minima(self):
        s = np.linspace(-2.0, 2.0, 41)
        np.testing.assert_allclose(interior_minima(s, (s - 1.0) ** 2), [1.0], atol=1e-12)
        self.assertEqual(interior_minima(s, (s - 1.0) ** 2, hi=0.5).size, 0)
        self.assertEqual(interior_minima(s, np.exp(s)).size, 0)

    def test_black_scholes_curve_kind(self):
        opt = OptionSpec(spot=100.0, strike=100.0, rate=0.05, volatility=0.3, maturity=1.0)
        with self.assertRaises(DomainError):
            black_scholes_curve("straddle", opt, np.array([100.0]))


class TestNlsGreeks(unittest.TestCase):
    """Closed-form sensitivities of the shock density against finite differences"""

    def setUp(self):
        u = np.linspace(-3.0, 3.0, 121)
        self.u = u[np.abs(u) >= 0.01]

    def _pdf(self, s, sigma, r, k, t):
        return shock_pdf(s, sigma, r, k, t)

    def test_first_order_greeks(self):
        h = 1e-6
        for sigma, r, k, t in _greek_cases():
            s = self.u + k * t * sigma
            closed = nls_greeks(s, sigma, r, k, t)
            scale = sigma / r
            fd = {
                "delta": (self._pdf(s + h, sigma, r, k, t) - self._pdf(s - h, sigma, r, k, t)) / (2 * h),
                "vega": (
                    self._pdf(s, sigma * (1 + h), r, k, t) - self._pdf(s, sigma * (1 - h), r, k, t)
                ) / (2 * h * sigma),
                "rho": (self._pdf(s, sigma, r * (1 + h), k, t) - self._pdf(s, sigma, r * (1 - h), k, t)) / (2 * h * r),
                "theta": (self._pdf(s, sigma, r, k, t + h) - self._pdf(s, sigma, r, k, t - h)) / (2 * h),
            }
            for name, numeric in fd.items():
                np.testing.assert_allclose(
                    closed[name], numeric, rtol=1e-6, atol=1e-7 * scale * max(1.0, 1.0 / r),
                    err_msg=f"{name}: sigma={sigma}, r={r}, k={k}, t={t}",
                )

    def test_gamma_by_second_difference(self):
        h = 1e-4
        for sigma, r, k, t in _greek_cases():
            s = self.u + k * t * sigma
            numeric = (
                self._pdf(s + h, sigma, r, k, t) - 2.0 * self._pdf(s, sigma, r, k, t) + self._pdf(s - h, sigma, r, k, t)
            ) / h**2
            np.testing.assert_allclose(
                nls_greeks(s, sigma, r, k, t)["gamma"], numeric, rtol=1e-6, atol=1e-5 * sigma / r
            )

    def test_zero_on_kink_line(self):
        greeks = nls_greeks(np.array([0.6]), 0.5, 0.05, 1.2, 1.0)
        for name, value in greeks.items():
            self.assertEqual(float(value[0]), 0.0, name)

    def test_zero_rate(self):
        with self.assertRaises(DomainError):
            nls_greeks(self.u, 0.3, 0.0, 1.0, 1.0)


@pytest.mark.parametrize(
    "z, expected",
    [(3.0 + 4.0j, (3.0 - 4.0j) / 5.0), (-2.0, -1.0), (0.0, 0.0), (1j, -1j)],
)
def test_abs_prime(z, expected):
    assert complex(abs_prime(z)) == pytest.approx(expected)
