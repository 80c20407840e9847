"""Numerical check of the discrete B-D entropy balance.

Balance to verify, with V = bd_core + log_term and K = kinetic energy:

    dV/dt + sum(six dissipation channels)
        = coupling + envelope_slack + 2*int rho|Du|^2 + signed crosses + dK/dt

Residual should shrink with dt (time discretization) for fixed resolution.
"""
import math
import numpy as np

from nspg.config import (
    DensityMode, InitialDataSpec, RunConfig, VelocityMode, build_initial_state,
)
from nspg.diagnostics import (
    compute_energy, compute_entropy, entropy_dissipation_rates,
    _grad_vals, _velocity_jacobian, _strain_sq, _speed_sq, _qsum,
)
from nspg.galerkin import run_simulation
from nspg.grid import SpectralField, laplacian_power, divergence
from nspg.continuity import mass_flux
from nspg.pressure import PressureLaw
from nspg.state import RegularizationParams


def signed_source(state, params, law):
    grid = state.rho.grid
    rv = state.rho.values
    gr = _grad_vals(state.rho)
    jac = _velocity_jacobian(state.u)
    dim = grid.dim

    dev = rv - state.rho.mean()
    coupling = -params.lambda_sign * 4.0 * math.pi * params.G * _qsum(grid, dev**2)

    slack = 0.0
    if law.b > 0.0:
        gs = _grad_vals(SpectralField.from_values(grid, np.sqrt(rv)))
        slack = 4.0 * law.b * _qsum(grid, sum(g**2 for g in gs))

    strain2 = 2.0 * _qsum(grid, rv * _strain_sq(jac))

    cross = 0.0
    if params.r1 > 0.0:
        speed = np.sqrt(_speed_sq(state.u))
        drag_cross = 0.0
        for comp, g in zip(state.u, gr):
            drag_cross = drag_cross + comp.values * g
        cross += -params.r1 * _qsum(grid, speed * drag_cross)
    if params.mu > 0.0:
        damping_cross = 0.0
        for i, g in enumerate(gr):
            ratio = SpectralField.from_values(grid, g / rv)
            damping_cross = damping_cross + (
                laplacian_power(state.u[i], 1).values * laplacian_power(ratio, 1).values
            )
        cross += -params.mu * _qsum(grid, damping_cross)
    if params.epsilon > 0.0:
        lap = laplacian_power(state.rho, 1).values
        divm = divergence(mass_flux(state.rho, state.u)).values
        cross += -params.epsilon * _qsum(grid, divm * lap / rv)
        mixed = 0.0
        for i in range(dim):
            for j in range(dim):
                mixed = mixed + gr[i] * jac[i][j] * gr[j]
        cross += -params.epsilon * _qsum(grid, mixed / rv)
        grad_rho_sq = sum(g**2 for g in gr)
        cross += -0.5 * params.epsilon * _qsum(grid, lap * grad_rho_sq / rv**2)

    return coupling + slack + strain2 + cross


def probe(lam, dt, t_end=0.16):
    cfg = RunConfig(
        dim=1, points=64, n_modes=21,
        params=RegularizationParams(
            epsilon=1e-2, mu=1e-3, eta=1e-4, delta=1e-4,
            r0=1e-3, r1=0.1, lambda_sign=lam, G=1.0,
        ),
        law=PressureLaw("PurePower", gamma=2.0, a=1.0, b=0.0),
        initial=InitialDataSpec(
            density_modes=(DensityMode((1,), 0.12), DensityMode((2,), 0.05, "sin")),
            velocity_modes=(VelocityMode(0, (1,), 0.08), VelocityMode(0, (2,), 0.04, "cos")),
            floor=0.5,
        ),
        dt=dt, t_end=t_end, seed=0,
    )
    state0 = build_initial_state(cfg.initial, cfg.grid, cfg.n_modes, cfg.params, cfg.seed)
    traj = run_simulation(state0, cfg.params, cfg.law, cfg.dt, cfg.t_end)
    params, law = cfg.params, cfg.law

    worst = 0.0
    scale = 0.0
    for k in range(len(traj.states) - 1):
        sa, sb = traj.states[k], traj.states[k + 1]
        ea = compute_entropy(sa, params, law)
        eb = compute_entropy(sb, params, law)
        va = ea.bd_core + ea.log_term
        vb = eb.bd_core + eb.log_term
        ka = compute_energy(sa, params, law).kinetic
        kb = compute_energy(sb, params, law).kinetic

        def chan(s):
            d = entropy_dissipation_rates(s, params, law)
            return (d.density_laplacian + d.drag_density_gradient + d.cold_gradient
                    + d.velocity_gradient + d.pressure_gradient + d.density_biharmonic)

        lhs = (vb - va) / dt + 0.5 * (chan(sa) + chan(sb))
        rhs = 0.5 * (signed_source(sa, params, law) + signed_source(sb, params, law))
        rhs += (kb - ka) / dt
        resid = lhs - rhs
        worst = max(worst, abs(resid))
        scale = max(scale, abs(lhs), abs(rhs))
    return worst, scale


for lam in (-1.0, 1.0):
    print(f"lambda_sign={lam:+.0f}")
    for dt in (4e-3, 2e-3, 1e-3):
        worst, scale = probe(lam, dt)
        print(f"  dt={dt:.0e}  max|resid|={worst:.4e}  scale={scale:.3e}  rel={worst/scale:.3e}")
