"""Potential solver checks against closed forms and a finite-difference oracle."""

import numpy as np
import pytest
import scipy.sparse
import scipy.sparse.linalg

from nspg.grid import (
    SpectralField,
    TorusGrid,
    gradient,
    integrate,
    l2_inner,
    l2_norm,
    pointwise_apply,
    random_field,
)
from nspg.poisson import PoissonConfig, poisson_residual, potential_energy_density, solve_poisson


def fd_poisson_1d(rho_values, period, lambda_sign, G):
    """Second-order periodic finite differences, mean-zero solution.

    Independent of the spectral machinery: assembles the circulant
    second-difference matrix, pins solvability with a Lagrange multiplier
    row enforcing sum(phi) = 0, and solves the bordered sparse system.
    """
    n = rho_values.size
    h = period / n
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    lap = scipy.sparse.diags([off, main, off], [-1, 0, 1], format="lil")
    lap[0, n - 1] = 1.0
    lap[n - 1, 0] = 1.0
    lap = (lambda_sign / h**2) * lap.tocsr()
    source = 4.0 * np.pi * G * (rho_values - rho_values.mean())
    ones = np.ones((n, 1))
    bordered = scipy.sparse.bmat([[lap, ones], [ones.T, None]], format="csc")
    rhs = np.concatenate([source, [0.0]])
    sol = scipy.sparse.linalg.spsolve(bordered, rhs)
    return sol[:n]


class TestClosedForms:
    def test_single_mode_attractive(self):
        # rho = 1 + A cos x, lambda = -1, G = 1  =>  Phi = 4 pi A cos x
        grid = TorusGrid.cubic(1, 64)
        amp = 0.25
        rho = SpectralField.constant(grid, 1.0) + SpectralField.harmonic(grid, (1,), amp, "cos")
        phi = solve_poisson(rho, PoissonConfig(-1, 1.0))
        expected = SpectralField.harmonic(grid, (1,), 4.0 * np.pi * amp, "cos")
        assert l2_norm(phi - expected) < 1e-12
        assert poisson_residual(rho, phi, PoissonConfig(-1, 1.0)) < 1e-12

    def test_single_mode_repulsive_flips_sign(self):
        grid = TorusGrid.cubic(1, 64)
        amp = 0.25
        rho = SpectralField.constant(grid, 1.0) + SpectralField.harmonic(grid, (1,), amp, "cos")
        phi = solve_poisson(rho, PoissonConfig(+1, 1.0))
        expected = SpectralField.harmonic(grid, (1,), -4.0 * np.pi * amp, "cos")
        assert l2_norm(phi - expected) < 1e-12

    def test_mode_two_nonunit_period_and_coupling(self):
        # kappa = 2 pi k / L scaling and the G prefactor together:
        # rho = 1 + A cos(kappa x)  =>  Phi = 4 pi G A cos(kappa x) / kappa^2.
        period = 5.0
        grid = TorusGrid.cubic(1, 128, period=period)
        amp, G = 0.3, 2.5
        kappa = 2.0 * np.pi * 2 / period
        rho = SpectralField.constant(grid, 1.0) + SpectralField.harmonic(grid, (2,), amp, "cos")
        phi = solve_poisson(rho, PoissonConfig(-1, G))
        expected = SpectralField.harmonic(grid, (2,), 4.0 * np.pi * G * amp / kappa**2, "cos")
        assert l2_norm(phi - expected) < 1e-12

    def test_uniform_density_gives_zero_potential(self):
        grid = TorusGrid.cubic(3, 16)
        phi = solve_poisson(SpectralField.constant(grid, 3.7))
        assert np.all(phi.coeffs == 0.0)

    def test_potential_energy_closed_form(self):
        # Phi = 4 pi A cos x: int |Phi'|^2 = 16 pi^3 A^2, /(8 pi) = 2 pi^2 A^2.
        grid = TorusGrid.cubic(1, 64)
        amp = 0.25
        rho = SpectralField.constant(grid, 1.0) + SpectralField.harmonic(grid, (1,), amp, "cos")
        phi = solve_poisson(rho, PoissonConfig(-1, 1.0))
        expected = 2.0 * np.pi**2 * amp**2
        assert abs(potential_energy_density(phi, 1.0) - expected) < 1e-12


class TestRandomFieldInvariants:
    def test_mean_zero_and_residual_3d(self):
        rng = np.random.default_rng(7)
        grid = TorusGrid.cubic(3, 16)
        for lam in (-1, 1):
            rho = random_field(grid, rng, kmax=4, amplitude=0.4, mean=1.0)
            phi = solve_poisson(rho, PoissonConfig(lam, 1.0))
            assert abs(phi.mean()) < 1e-14
            assert poisson_residual(rho, phi, PoissonConfig(lam, 1.0)) < 1e-12

    def test_energy_identity(self):
        # int |grad Phi|^2 = -(4 pi G / lambda) int Phi (rho - mean), by parts.
        rng = np.random.default_rng(11)
        grid = TorusGrid.cubic(3, 16)
        G = 1.5
        for lam in (-1, 1):
            rho = random_field(grid, rng, kmax=4, amplitude=0.3, mean=1.0)
            phi = solve_poisson(rho, PoissonConfig(lam, G))
            grad_sq = sum(l2_norm(c) ** 2 for c in gradient(phi))
            fluct = rho - SpectralField.constant(grid, rho.mean())
            coupled = -(4.0 * np.pi * G / lam) * l2_inner(phi, fluct)
            assert abs(grad_sq - coupled) <= 1e-9 * (1.0 + abs(grad_sq))

    def test_energy_identity_via_quadrature(self):
        # Same identity with the grad square formed pointwise, so the grid
        # quadrature path is exercised too, not just Parseval.
        rng = np.random.default_rng(13)
        grid = TorusGrid.cubic(2, 32)
        rho = random_field(grid, rng, kmax=5, amplitude=0.3, mean=1.0)
        phi = solve_poisson(rho, PoissonConfig(-1, 1.0))
        grad_sq = sum(
            integrate(pointwise_apply([c], lambda v: v * v)) for c in gradient(phi)
        )
        fluct = rho - SpectralField.constant(grid, rho.mean())
        coupled = 4.0 * np.pi * l2_inner(phi, fluct)
        assert abs(grad_sq - coupled) <= 1e-9 * (1.0 + abs(grad_sq))


class TestFiniteDifferenceOracle:
    def test_matches_fd_solution_second_order(self):
        rng = np.random.default_rng(3)
        coarse = TorusGrid.cubic(1, 64)
        rho_coarse = random_field(coarse, rng, kmax=3, amplitude=0.4, mean=1.0)
        errors = []
        for n in (128, 256, 512):
            grid = TorusGrid.cubic(1, n)
            # resample the band-limited density exactly on the finer grid
            rho = SpectralField.zeros(grid)
            c = np.zeros(n, dtype=np.complex128)
            half = coarse.points[0] // 2
            src = rho_coarse.coeffs / coarse.n_total
            c[: half] = src[: half]
            c[n - half :] = src[coarse.points[0] - half :]
            rho = SpectralField(grid, c * n)
            phi = solve_poisson(rho, PoissonConfig(-1, 1.0))
            fd = fd_poisson_1d(rho.values, grid.period[0], -1, 1.0)
            errors.append(np.max(np.abs(phi.values - fd)))
        orders = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
        assert min(orders) > 1.9
        assert errors[-1] < 5e-4

    def test_fd_oracle_2d_five_point(self):
        # 2d cross-check on a single mode where the answer is known exactly
        grid = TorusGrid.cubic(2, 64)
        amp = 0.2
        rho = SpectralField.constant(grid, 1.0) + SpectralField.harmonic(grid, (1, 1), amp, "cos")
        phi = solve_poisson(rho, PoissonConfig(-1, 1.0))
        expected = SpectralField.harmonic(grid, (1, 1), 4.0 * np.pi * amp / 2.0, "cos")
        assert l2_norm(phi - expected) < 1e-12


class TestValidation:
    def test_bad_lambda_rejected(self):
        with pytest.raises(ValueError, match="lambda_sign"):
            PoissonConfig(lambda_sign=0)

    def test_nonpositive_coupling_rejected(self):
        with pytest.raises(ValueError, match="coupling"):
            PoissonConfig(lambda_sign=-1, G=0.0)
        with pytest.raises(ValueError, match="coupling"):
            PoissonConfig(lambda_sign=-1, G=-2.0)
