"""Continuity stepping: decay recursion, mass, convergence, comparison bounds."""

import numpy as np
import pytest

from nspg.continuity import (
    ContinuityConfig,
    PositivityLossError,
    comparison_bounds,
    continuity_contraction_probe,
    stable_dt_bound,
    step_continuity,
)
from nspg.grid import SpectralField, TorusGrid, VectorField, derivative, l2_norm, random_field

TWO_PI = 2.0 * np.pi


def _velocity_1d(grid, amplitude, wavevector=1, kind="sin"):
    return VectorField((SpectralField.harmonic(grid, (wavevector,), amplitude, kind),))


class TestHeatDecay:
    def test_single_mode_decay_recursion(self):
        """With u = 0 the k-mode obeys c -> c / (1 + eps dt kappa^2) exactly.

        eps = 0.1, dt = 0.05, kappa = 1: factor 1/1.005 per step.
        """
        g = TorusGrid.cubic(1, 64)
        eps, dt = 0.1, 0.05
        cfg = ContinuityConfig(epsilon=eps, dt=dt)
        rho = SpectralField.constant(g, 1.0) + SpectralField.harmonic(g, (1,), 0.1, "cos")
        u = VectorField.zeros(g)
        x = g.coordinates[0]
        amp = 0.1
        for _ in range(10):
            rho = step_continuity(rho, u, cfg)
            amp /= 1.005
        assert np.max(np.abs(rho.values - (1.0 + amp * np.cos(x)))) < 1e-13

    def test_constant_density_is_fixed_point(self):
        g = TorusGrid.cubic(2, 16)
        cfg = ContinuityConfig(epsilon=0.05, dt=0.01)
        rho = SpectralField.constant(g, 1.0)
        u = VectorField.zeros(g)
        new = step_continuity(rho, u, cfg)
        assert np.max(np.abs(new.coeffs - rho.coeffs)) == 0.0


class TestMassConservation:
    def test_mass_exact_over_hundred_steps(self):
        """The mean mode is untouched by fluxes: drift stays below 1e-12."""
        rng = np.random.default_rng(8)
        g = TorusGrid.cubic(1, 64)
        cfg = ContinuityConfig(epsilon=0.02, dt=0.005)
        rho = random_field(g, rng, kmax=4, amplitude=0.2, mean=1.0)
        u = VectorField((random_field(g, rng, kmax=4, amplitude=0.3),))
        m0 = rho.mean()
        for _ in range(100):
            rho = step_continuity(rho, u, cfg)
            assert abs(rho.mean() - m0) < 1e-12

    def test_mass_conserved_without_diffusion(self):
        """eps = 0 replay mode also conserves mass."""
        rng = np.random.default_rng(9)
        g = TorusGrid.cubic(1, 64)
        cfg = ContinuityConfig(epsilon=0.0, dt=0.005)
        rho = random_field(g, rng, kmax=3, amplitude=0.15, mean=1.0)
        u = VectorField((random_field(g, rng, kmax=3, amplitude=0.2),))
        m0 = rho.mean()
        for _ in range(20):
            rho = step_continuity(rho, u, cfg)
        assert abs(rho.mean() - m0) < 1e-12


class TestManufacturedSolution:
    def test_first_order_convergence(self):
        """Forced stepping reproduces rho* = 2 + e^{-t} sin(x - t) at order 1."""
        g = TorusGrid.cubic(1, 64)
        eps = 0.02
        x = g.coordinates[0]
        u_amp = 0.3
        u = _velocity_1d(g, u_amp)

        def exact(t):
            return 2.0 + np.exp(-t) * np.sin(x - t)

        def forcing_values(t):
            s, c = np.sin(x - t), np.cos(x - t)
            drho = -np.exp(-t) * (s + c)
            div_flux = u_amp * np.cos(x) * (2.0 + np.exp(-t) * s) + u_amp * np.sin(
                x
            ) * np.exp(-t) * c
            lap = -np.exp(-t) * s
            return drho + div_flux - eps * lap

        T = 0.5
        errors = []
        for steps in (20, 40, 80):
            dt = T / steps
            cfg = ContinuityConfig(epsilon=eps, dt=dt)
            rho = SpectralField.from_values(g, exact(0.0))
            for m in range(steps):
                forcing = SpectralField.from_values(g, forcing_values(m * dt))
                rho = step_continuity(rho, u, cfg, forcing=forcing)
            errors.append(l2_norm(rho - SpectralField.from_values(g, exact(T))))
        orders = [np.log2(a / b) for a, b in zip(errors, errors[1:])]
        assert min(orders) >= 0.9


class TestComparisonBounds:
    def test_frozen_values(self):
        """(0.5, 2.0, log 2) -> (0.25, 4.0)."""
        lo, hi = comparison_bounds(0.5, 2.0, np.log(2.0))
        assert lo == pytest.approx(0.25, rel=1e-12)
        assert hi == pytest.approx(4.0, rel=1e-12)

    def test_zero_integral_is_identity(self):
        assert comparison_bounds(0.7, 1.3, 0.0) == (0.7, 1.3)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            comparison_bounds(0.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            comparison_bounds(1.0, 0.5, 0.1)
        with pytest.raises(ValueError):
            comparison_bounds(0.5, 1.0, -0.1)

    def test_trajectory_respects_envelope(self):
        """Stepped extremes stay inside the envelope from accumulated |div u|."""
        g = TorusGrid.cubic(1, 64)
        cfg = ContinuityConfig(epsilon=0.01, dt=0.01)
        rho = SpectralField.constant(g, 1.0) + SpectralField.harmonic(g, (2,), 0.2, "cos")
        u = _velocity_1d(g, 0.2)
        lo0, hi0 = float(np.min(rho.values)), float(np.max(rho.values))
        acc = 0.0
        for _ in range(50):
            acc += cfg.dt * float(np.max(np.abs(derivative(u[0], 0).values)))
            rho = step_continuity(rho, u, cfg)
            lo, hi = comparison_bounds(lo0, hi0, acc)
            assert np.min(rho.values) >= lo - 1e-3
            assert np.max(rho.values) <= hi + 1e-3


class TestPositivity:
    def test_violent_step_raises_with_location(self):
        g = TorusGrid.cubic(1, 64)
        cfg = ContinuityConfig(epsilon=0.01, dt=0.8)
        rho = SpectralField.constant(g, 1.0) + SpectralField.harmonic(g, (1,), 0.9, "cos")
        u = _velocity_1d(g, -3.0)
        with pytest.raises(PositivityLossError, match="grid point"):
            step_continuity(rho, u, cfg)

    def test_nonpositive_input_rejected(self):
        g = TorusGrid.cubic(1, 64)
        cfg = ContinuityConfig(epsilon=0.01, dt=0.01)
        rho = SpectralField.constant(g, 0.5) + SpectralField.harmonic(g, (1,), 0.6, "cos")
        with pytest.raises(PositivityLossError, match="input density"):
            step_continuity(rho, VectorField.zeros(g), cfg)


class TestContractionProbe:
    def test_ratio_shrinks_linearly_with_horizon(self):
        g = TorusGrid.cubic(1, 64)
        cfg = ContinuityConfig(epsilon=0.02, dt=0.01)
        rho = SpectralField.constant(g, 1.0) + SpectralField.harmonic(g, (1,), 0.2, "cos")
        u1 = _velocity_1d(g, 0.3)
        u2 = _velocity_1d(g, 0.2)
        ratios = [
            continuity_contraction_probe(rho, u1, u2, cfg, horizon)
            for horizon in (0.16, 0.08, 0.04)
        ]
        orders = [np.log2(a / b) for a, b in zip(ratios, ratios[1:])]
        assert min(orders) >= 0.9

    def test_identical_velocities_rejected(self):
        g = TorusGrid.cubic(1, 64)
        cfg = ContinuityConfig(epsilon=0.02, dt=0.01)
        rho = SpectralField.constant(g, 1.0)
        u = _velocity_1d(g, 0.3)
        with pytest.raises(ValueError, match="identical"):
            continuity_contraction_probe(rho, u, u, cfg, 0.04)


class TestConfig:
    def test_dt_positive(self):
        with pytest.raises(ValueError, match="dt"):
            ContinuityConfig(epsilon=0.1, dt=0.0)

    def test_epsilon_nonnegative(self):
        with pytest.raises(ValueError, match="epsilon"):
            ContinuityConfig(epsilon=-0.1, dt=0.1)

    def test_stable_dt_bound(self):
        g = TorusGrid.cubic(1, 64)
        h = TWO_PI / 64
        assert stable_dt_bound(g, 0.1) == pytest.approx(0.25 * h / 1.1, rel=1e-12)
