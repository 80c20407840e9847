"""Shared solver state: regularization knobs and the evolved fields.

Kept separate from the stepping code so the diagnostics layer can consume
states without importing the solver (and vice versa).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SpectralField, VectorField, galerkin_mode_budget, truncate_modes
from .poisson import PoissonConfig

__all__ = ["RegularizationParams", "GalerkinState"]


@dataclass(frozen=True)
class RegularizationParams:
    """Coefficients of the regularizing terms, all >= 0.

    epsilon  density diffusion and the grad(rho).grad(u) momentum coupling
    mu       fourth-order velocity damping Lap^2 u
    eta      vacuum-penalizing pressure rho^-6
    delta    capillarity-type term rho grad Lap^3 rho
    r0       linear velocity drag
    r1       quadratic drag rho |u| u
    The target hyperbolic-viscous level is epsilon=mu=eta=delta=r0=0 with
    r1 > 0; intermediate levels keep them positive.
    """

    epsilon: float = 0.0
    mu: float = 0.0
    eta: float = 0.0
    delta: float = 0.0
    r0: float = 0.0
    r1: float = 0.0
    lambda_sign: int = -1
    G: float = 1.0

    def __post_init__(self):
        for name in ("epsilon", "mu", "eta", "delta", "r0", "r1"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        PoissonConfig(self.lambda_sign, self.G)  # reuse its validation

    @property
    def poisson(self) -> PoissonConfig:
        return PoissonConfig(self.lambda_sign, self.G)


@dataclass(frozen=True)
class GalerkinState:
    """One time slice: density, velocity in the first n modes, potential.

    The potential is derived state (re-solved after every density update);
    it is carried here so diagnostics never re-solve unnecessarily.
    Construction enforces the two structural invariants: the velocity lies
    exactly in the n-mode subspace, and the density is strictly positive
    on the grid.
    """

    rho: SpectralField
    u: VectorField
    phi: SpectralField
    time: float
    n_modes: int

    def __post_init__(self):
        grid = self.rho.grid
        if self.u.grid != grid or self.phi.grid != grid:
            raise ValueError("state fields live on different grids")
        if not np.isfinite(self.time) or self.time < 0:
            raise ValueError(f"time must be finite and >= 0, got {self.time}")
        budget = galerkin_mode_budget(grid)
        if not 1 <= self.n_modes <= budget:
            raise ValueError(
                f"n_modes={self.n_modes} outside 1..{budget} "
                f"(dealias-compatible budget for this grid)"
            )
        for c, comp in enumerate(self.u):
            kept = truncate_modes(comp, self.n_modes)
            if not np.array_equal(kept.coeffs, comp.coeffs):
                raise ValueError(
                    f"velocity component {c} has support outside the first "
                    f"{self.n_modes} modes"
                )
        rho_min = float(self.rho.values.min())
        if rho_min <= 0.0:
            raise ValueError(f"density must be strictly positive, min is {rho_min:.6e}")

    @property
    def rho_min(self) -> float:
        return float(self.rho.values.min())

    @property
    def rho_max(self) -> float:
        return float(self.rho.values.max())
