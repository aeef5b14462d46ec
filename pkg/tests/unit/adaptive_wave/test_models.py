import math
import unittest

import numpy as np
from pydantic import ValidationError

from adaptive_wave.models import (
    ComplexField,
    EllipticModulus,
    EvolutionConfig,
    FitResult,
    GridSpec,
    HebbConfig,
    HebbianCoupling,
    ManakovParams,
    MarketPotential,
    OptionSpec,
    PricePath,
    RunConfig,
    StationaryParams,
    WaveFamily,
    WaveParams,
)


class TestModels(unittest.TestCase):
    """Test cases for the models module"""

    def test_option_spec(self):
        """Test the OptionSpec model"""
        opt = OptionSpec(spot=100.0, strike=90.0, rate=0.05, volatility=0.2, maturity=1.0)
        self.assertEqual(opt.dividend_yield, 0.0)
        with self.assertRaises(ValidationError):
            OptionSpec(spot=100.0, strike=0.0, rate=0.05, volatility=0.2, maturity=1.0)
        with self.assertRaises(ValidationError):
            OptionSpec(spot=100.0, strike=90.0, rate=0.05, volatility=0.2, maturity=1.0, dividend_yield=-0.1)
        with self.assertRaises(ValidationError):
            OptionSpec(spot=math.nan, strike=90.0, rate=0.05, volatility=0.2, maturity=1.0)

    def test_models_are_frozen(self):
        opt = OptionSpec(spot=100.0, strike=90.0, rate=0.05, volatility=0.2, maturity=1.0)
        with self.assertRaises(ValidationError):
            opt.strike = 80.0

    def test_wave_family(self):
        self.assertTrue(WaveFamily("sn").is_shock)
        self.assertTrue(WaveFamily.TANH.is_shock)
        self.assertFalse(WaveFamily.SECH.is_shock)
        with self.assertRaises(ValueError):
            WaveFamily("sine")

    def test_wave_params(self):
        """Test the WaveParams model"""
        p = WaveParams()
        self.assertEqual((p.wave_number, p.modulus, p.volatility, p.potential, p.branch), (1.2, 1.0, 1.0, 1.0, 1))
        with self.assertRaises(ValidationError):
            WaveParams(potential=0.0)
        with self.assertRaises(ValidationError):
            WaveParams(modulus=1.5)
        with self.assertRaises(ValidationError):
            WaveParams(branch=2)
        with self.assertRaises(ValidationError):
            EllipticModulus(m=-0.1)

    def test_market_potential(self):
        """Test the MarketPotential model"""
        pot = MarketPotential.from_columns(0.05, [1.0, 2.0], [3.0, 4.0], [5.0, 6.0])
        self.assertEqual(pot.n, 2)
        w1, w2, w3 = pot.as_arrays()
        np.testing.assert_array_equal(w3, [5.0, 6.0])
        with self.assertRaises(ValidationError):
            MarketPotential(rate=0.05, terms=[(1.0, 1.0, 0.0)])
        with self.assertRaises(ValidationError):
            MarketPotential(rate=0.05, terms=[])

    def test_hebbian_models(self):
        cfg = HebbConfig(widths=[1.0, -2.0], initial_weights=[0.5, 0.5])
        self.assertEqual(cfg.n, 2)
        self.assertEqual(cfg.learning_rate, 0.7)
        with self.assertRaises(ValidationError):
            HebbConfig(widths=[1.0, 0.0], initial_weights=[0.5, 0.5])
        with self.assertRaises(ValidationError):
            HebbConfig(widths=[1.0], initial_weights=[0.5, 0.5])
        coupling = HebbianCoupling(interest_rate=0.05, widths=[1.0], initial_weights=[1.0])
        self.assertEqual(coupling.reduction, "peak")
        with self.assertRaises(ValidationError):
            HebbianCoupling(interest_rate=0.05, widths=[1.0], initial_weights=[1.0], reduction="mean")

    def test_stationary_params(self):
        self.assertAlmostEqual(StationaryParams(family="periodic", w=3.0, frequency_b=4.0).amplitude, 5.0)
        with self.assertRaises(ValidationError):
            StationaryParams(family="asymmetric", w=1.5)
        with self.assertRaises(ValidationError):
            StationaryParams(family="kink", w=-1.0)

    def test_grid_spec(self):
        grid = GridSpec(s_min=-1.0, s_max=1.0, n=21)
        self.assertAlmostEqual(grid.spacing, 0.1)
        self.assertEqual(grid.points().size, 21)
        with self.assertRaises(ValidationError):
            GridSpec(s_min=1.0, s_max=-1.0, n=21)
        with self.assertRaises(ValidationError):
            GridSpec(s_min=-1.0, s_max=1.0, n=8)

    def test_evolution_config(self):
        """Test the EvolutionConfig model"""
        cfg = EvolutionConfig(dt=0.3, t_end=1.0)
        self.assertEqual(cfg.n_steps, 4)
        self.assertAlmostEqual(cfg.step, 0.25)
        path = EvolutionConfig(dt=0.1, t_end=1.0, dispersion=[1.0, 2.0])
        self.assertEqual(path.dispersion_at(0), 1.0)
        self.assertEqual(path.dispersion_at(9), 2.0)
        with self.assertRaises(ValidationError):
            EvolutionConfig(dt=0.1, t_end=1.0, dispersion=0.0)
        with self.assertRaises(ValidationError):
            EvolutionConfig(dt=0.1, t_end=1.0, dispersion=[1.0, -1.0])
        with self.assertRaises(ValidationError):
            EvolutionConfig(dt=0.1, t_end=1.0, blowup_factor=1.0)

    def test_run_config(self):
        """Test the RunConfig model"""
        run = RunConfig(command="bs-price", parameters={"strike": 100, "rate": 0.05, "vol": 0.2, "maturity": 1})
        self.assertEqual(run.format, "csv")
        with self.assertRaises(ValidationError):
            RunConfig(command="bs-price", parameters={"strike": 100})
        with self.assertRaises(ValidationError):
            RunConfig(command="plot", parameters={})

    def test_fit_result(self):
        result = FitResult(params=[1.0, 2.0], param_names=["a", "b"], rmse=0.0, iterations=0, loss_trace=[0.0], converged=True)
        self.assertEqual(result.named_params(), {"a": 1.0, "b": 2.0})
        with self.assertRaises(ValidationError):
            FitResult(params=[], rmse=-1.0, iterations=0, loss_trace=[], converged=False)


class TestContainers(unittest.TestCase):
    """Test cases for the array-carrying dataclasses"""

    def test_price_path(self):
        path = PricePath([0.0, 1.0], [1.0, 2.0], seed=0)
        self.assertEqual(len(path), 2)
        with self.assertRaises(ValueError):
            PricePath([0.0, 0.0], [1.0, 2.0], seed=0)
        with self.assertRaises(ValueError):
            PricePath([0.0, 1.0], [1.0], seed=0)
        with self.assertRaises(ValueError):
            PricePath([0.0, 1.0], [1.0, math.inf], seed=0)

    def test_complex_field(self):
        field = ComplexField(-1.0, 1.0, np.ones(21))
        self.assertEqual(field.values.dtype, complex)
        self.assertAlmostEqual(field.spacing, 0.1)
        moved = field.with_values(field.values * 2.0, 0.5)
        self.assertEqual(moved.t, 0.5)
        self.assertEqual(field.values[0], 1.0)
        zeros = ComplexField.zeros(GridSpec(s_min=0.0, s_max=1.0, n=16))
        self.assertEqual(zeros.n, 16)
        with self.assertRaises(ValueError):
            ComplexField(-1.0, 1.0, np.ones(4))
        with self.assertRaises(ValueError):
            ComplexField(-1.0, 1.0, np.full(21, np.nan))

    def test_manakov_params(self):
        ManakovParams(a=0.0, b=1.0, polarization=(0.6, 0.8j))
        with self.assertRaises(ValueError):
            ManakovParams(a=0.0, b=0.0)
        with self.assertRaises(ValueError):
            ManakovParams(a=0.0, b=1.0, polarization=(1.0, 1.0))


if __name__ == "__main__":
    unittest.main()
