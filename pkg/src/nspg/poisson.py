"""Mean-zero potential coupling on the torus.

Solves  lambda Lap(Phi) = 4 pi G (rho - mean rho)  spectrally:

    Phi_hat(k) = -4 pi G rho_hat(k) / (lambda |kappa|^2),   Phi_hat(0) = 0.

lambda = -1 is the attractive (self-gravity) sign, lambda = +1 the
repulsive (electrostatic) one; the sign never branches, it only scales the
inversion.  Subtracting the spatial mean is what makes the periodic
problem solvable (total neutrality), and int Phi = 0 fixes the solution
uniquely.  The Green's-function convolution form of the same solution is
never materialized; the Fourier inversion is identical and exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SpectralField, gradient, l2_norm, laplacian_power

__all__ = ["PoissonConfig", "solve_poisson", "poisson_residual", "potential_energy_density"]


@dataclass(frozen=True)
class PoissonConfig:
    """Coupling sign and strength for the potential equation."""

    lambda_sign: int = -1
    G: float = 1.0

    def __post_init__(self):
        if self.lambda_sign not in (-1, 1):
            raise ValueError(f"lambda_sign must be -1 or +1, got {self.lambda_sign}")
        if not np.isfinite(self.G) or self.G <= 0:
            raise ValueError(f"coupling constant G must be positive, got {self.G}")


def solve_poisson(rho: SpectralField, cfg: PoissonConfig = PoissonConfig()) -> SpectralField:
    """Potential of the mean-subtracted density, normalized to zero mean."""
    grid = rho.grid
    k2 = grid.kappa_squared.copy()
    zero = (0,) * grid.dim
    k2[zero] = 1.0  # mean mode handled separately (set to zero below)
    coeffs = -4.0 * np.pi * cfg.G * rho.coeffs / (cfg.lambda_sign * k2)
    coeffs[zero] = 0.0
    return SpectralField(grid, coeffs)


def poisson_residual(rho: SpectralField, phi: SpectralField, cfg: PoissonConfig = PoissonConfig()) -> float:
    """Relative residual || lambda Lap Phi - 4 pi G (rho - mean) || / (1 + ||source||)."""
    source = 4.0 * np.pi * cfg.G * (rho - SpectralField.constant(rho.grid, rho.mean()))
    lhs = float(cfg.lambda_sign) * laplacian_power(phi, 1)
    return l2_norm(lhs - source) / (1.0 + l2_norm(source))


def potential_energy_density(phi: SpectralField, G: float) -> float:
    """int |grad Phi|^2 / (8 pi G), the unsigned potential energy."""
    total = sum(l2_norm(comp) ** 2 for comp in gradient(phi))
    return total / (8.0 * np.pi * G)
