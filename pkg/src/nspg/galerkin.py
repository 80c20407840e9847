"""Mass operator, momentum right-hand side, and the Picard time stepper.

One time step advances the coupled density/velocity/potential triple with a
fixed-point loop: freeze the velocity, advance the density semi-implicitly,
re-solve the potential, assemble the ten momentum terms, and invert the
density-weighted mass operator for the next velocity iterate.  The loop
either contracts below tolerance or raises, and the driver that walks a
whole trajectory accumulates every diagnostic ledger with the same
left-endpoint rule the inequality checks assume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .continuity import (
    ContinuityConfig,
    PositivityLossError,
    step_continuity,
)
from .diagnostics import (
    DiagnosticsRecord,
    DissipationLedger,
    EntropyBreakdown,
    EntropyDissipations,
    compute_energy,
    compute_entropy,
    dissipation_rates,
    energy_source_rate,
    entropy_dissipation_rates,
    entropy_source_rate,
)
from .grid import (
    PointwiseEvaluationError,
    SpectralField,
    VectorField,
    basis_matrix,
    derivative,
    divergence,
    field_from_coeffs,
    gradient,
    laplacian_power,
    pointwise_apply,
    project_coeffs,
)
from .poisson import solve_poisson
from .pressure import PressureLaw
from .state import GalerkinState, RegularizationParams

__all__ = [
    "MOMENTUM_TERMS",
    "MassOperator",
    "NoContractionError",
    "NonPositiveDensityError",
    "PicardStepResult",
    "SimulationAbortedError",
    "Trajectory",
    "build_mass_operator",
    "mass_solve",
    "momentum_rhs",
    "momentum_rhs_terms",
    "picard_step",
    "run_simulation",
]


class NonPositiveDensityError(RuntimeError):
    """The density handed to the mass operator is not strictly positive."""


class NoContractionError(RuntimeError):
    """The fixed-point loop failed to contract within max_iter.

    Carries the full residual history; the usual cause is a time step too
    large for the current fields.
    """

    def __init__(self, message: str, residuals: list[float]):
        super().__init__(message)
        self.residuals = list(residuals)


class SimulationAbortedError(RuntimeError):
    """A trajectory run died mid-flight.

    ``trajectory`` holds everything up to and including the last good
    state; ``cause`` is the underlying step failure.
    """

    def __init__(self, step: int, time: float, cause: Exception, trajectory: "Trajectory"):
        super().__init__(f"run aborted at step {step} (t={time:.6g}): {cause}")
        self.step = step
        self.time = time
        self.cause = cause
        self.trajectory = trajectory


# ---------------------------------------------------------------------------
# mass operator

@dataclass(frozen=True)
class MassOperator:
    """Density-weighted Gram operator on the first n modes.

    ``gram[i, j] = int rho e_i e_j``; the Cholesky factor is kept so
    repeated solves during a fixed-point loop cost one triangular pair
    each.  Positive density makes this SPD with smallest eigenvalue at
    least min rho (the basis is orthonormal, so the Rayleigh quotient is a
    density average).
    """

    rho: SpectralField
    n_modes: int
    gram: np.ndarray
    cho: tuple

    @property
    def min_rho(self) -> float:
        return float(self.rho.values.min())


def build_mass_operator(rho: SpectralField, n_modes: int) -> MassOperator:
    """Assemble and factor the Gram matrix of the density inner product."""
    vals = rho.values
    m = float(vals.min())
    if m <= 0.0:
        idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise NonPositiveDensityError(
            f"density is {m:.6e} at grid point {tuple(int(i) for i in idx)}"
        )
    grid = rho.grid
    basis = basis_matrix(grid, n_modes)
    weighted = basis * (vals.ravel() * grid.cell_volume)[:, None]
    gram = weighted.T @ basis
    gram = 0.5 * (gram + gram.T)
    try:
        cho = cho_factor(gram, lower=False)
    except LinAlgError as exc:  # unreachable for positive rho, kept as a seam
        raise NonPositiveDensityError(f"Gram factorization failed: {exc}") from exc
    return MassOperator(rho=rho, n_modes=n_modes, gram=gram, cho=cho)


def mass_solve(op: MassOperator, rhs: np.ndarray) -> np.ndarray:
    """Solve gram @ x = rhs for one (n,) or several (dim, n) right sides."""
    arr = np.asarray(rhs, dtype=np.float64)
    squeeze = arr.ndim == 1
    stacked = arr[None, :] if squeeze else arr
    x = cho_solve(op.cho, stacked.T).T
    residual = float(np.linalg.norm(x @ op.gram - stacked))
    if residual > 1e-12 * (1.0 + float(np.linalg.norm(stacked))):
        raise NonPositiveDensityError(
            f"mass solve residual {residual:.3e} exceeds tolerance; "
            "operator is numerically singular"
        )
    return x[0] if squeeze else x


# ---------------------------------------------------------------------------
# momentum right-hand side

MOMENTUM_TERMS = (
    "gravity",
    "convection",
    "viscosity",
    "hyperviscosity",
    "grad_coupling",
    "pressure",
    "cold_pressure",
    "linear_drag",
    "quadratic_drag",
    "capillarity",
)


def _project_components(comps, n: int) -> np.ndarray:
    return np.stack([project_coeffs(c, n) for c in comps])


def momentum_rhs_terms(
    state: GalerkinState, params: RegularizationParams, law: PressureLaw
) -> dict[str, np.ndarray]:
    """All ten momentum terms, each projected onto the first n modes.

    Returns {term name: (dim, n) coefficient block}.  Terms whose
    coefficient is zero are reported as zero blocks without being
    evaluated.  Products are dealiased pointwise evaluations; derivatives
    are spectral.
    """
    grid = state.rho.grid
    rho, u = state.rho, state.u
    dim, n = grid.dim, state.n_modes
    zero = np.zeros((dim, n))
    out: dict[str, np.ndarray] = {}

    def put(name: str, builder) -> None:
        try:
            block = _project_components(builder(), n)
        except (PointwiseEvaluationError, ValueError, FloatingPointError) as exc:
            if isinstance(exc, ValueError) and "finite" not in str(exc):
                raise
            raise FloatingPointError(
                f"momentum term {name!r} produced non-finite values"
            ) from exc
        if not np.all(np.isfinite(block)):
            raise FloatingPointError(f"momentum term {name!r} produced non-finite values")
        out[name] = block

    put("gravity", lambda: [
        pointwise_apply([rho, dphi], lambda r, g: r * g) for dphi in gradient(state.phi)
    ])

    def convection():
        comps = []
        for i in range(dim):
            acc = SpectralField.zeros(grid)
            for j in range(dim):
                flux = pointwise_apply([rho, u[i], u[j]], lambda r, a, b: r * a * b)
                acc = acc + derivative(flux, j)
            comps.append(-1.0 * acc)
        return comps

    put("convection", convection)

    def viscosity():
        strain = [[None] * dim for _ in range(dim)]
        for i in range(dim):
            for j in range(i, dim):
                d = 0.5 * (derivative(u[j], i) + derivative(u[i], j))
                s = pointwise_apply([rho, d], lambda r, v: r * v)
                strain[i][j] = s
                strain[j][i] = s
        return [
            sum((derivative(strain[i][j], j) for j in range(dim)), SpectralField.zeros(grid))
            for i in range(dim)
        ]

    put("viscosity", viscosity)

    if params.mu > 0.0:
        put("hyperviscosity", lambda: [-params.mu * laplacian_power(c, 2) for c in u])
    else:
        out["hyperviscosity"] = zero

    def grad_coupling():
        grad_rho = gradient(rho)
        comps = []
        for i in range(dim):
            acc = SpectralField.zeros(grid)
            for j in range(dim):
                acc = acc + pointwise_apply(
                    [grad_rho[j], derivative(u[i], j)], lambda a, b: a * b
                )
            comps.append(-params.epsilon * acc)
        return comps

    if params.epsilon > 0.0:
        put("grad_coupling", grad_coupling)
    else:
        out["grad_coupling"] = zero

    put("pressure", lambda: [
        -1.0 * d for d in gradient(SpectralField.from_values(grid, law.p(rho.values)))
    ])

    if params.eta > 0.0:
        put("cold_pressure", lambda: [
            params.eta * d
            for d in gradient(SpectralField.from_values(grid, rho.values**-6))
        ])
    else:
        out["cold_pressure"] = zero

    if params.r0 > 0.0:
        put("linear_drag", lambda: [-params.r0 * c for c in u])
    else:
        out["linear_drag"] = zero

    def quadratic_drag():
        comps = list(u.components)

        def component(i):
            return pointwise_apply(
                [rho, *comps],
                lambda r, *uv: -params.r1 * r * np.sqrt(sum(v * v for v in uv)) * uv[i],
            )

        return [component(i) for i in range(dim)]

    if params.r1 > 0.0:
        put("quadratic_drag", quadratic_drag)
    else:
        out["quadratic_drag"] = zero

    def capillarity():
        lap3 = laplacian_power(rho, 3)
        return [
            params.delta
            * pointwise_apply([rho, derivative(lap3, i)], lambda r, g: r * g)
            for i in range(dim)
        ]

    if params.delta > 0.0:
        put("capillarity", capillarity)
    else:
        out["capillarity"] = zero

    return out


def momentum_rhs(
    state: GalerkinState, params: RegularizationParams, law: PressureLaw
) -> np.ndarray:
    """Summed momentum functional, shape (dim, n)."""
    terms = momentum_rhs_terms(state, params, law)
    total = np.zeros((state.rho.grid.dim, state.n_modes))
    for name in MOMENTUM_TERMS:
        total = total + terms[name]
    return total


# ---------------------------------------------------------------------------
# time stepping

@dataclass(frozen=True)
class PicardStepResult:
    """Converged state plus the fixed-point iteration history."""

    state: GalerkinState
    iterations: int
    residuals: tuple


def picard_step(
    state: GalerkinState,
    dt: float,
    params: RegularizationParams,
    law: PressureLaw,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> PicardStepResult:
    """Advance one step of the coupled system by fixed-point iteration.

    Each pass freezes the velocity iterate, advances the density through
    the semi-implicit continuity step, re-solves the potential, and
    inverts the updated mass operator against the frozen momentum
    functional plus dt times the full right-hand side.  The residual is
    the coefficient-space distance between consecutive velocity iterates
    (the basis is orthonormal, so this is the L2 distance).
    """
    if dt <= 0.0 or not np.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    grid = state.rho.grid
    n = state.n_modes
    cfg = ContinuityConfig(epsilon=params.epsilon, dt=dt)
    op_old = build_mass_operator(state.rho, n)
    u_coeffs = _project_components(state.u.components, n)
    momentum_old = u_coeffs @ op_old.gram

    guess_coeffs = u_coeffs
    guess_field = state.u
    residuals: list[float] = []
    converged = False
    for _ in range(max_iter):
        try:
            rho_k = step_continuity(state.rho, guess_field, cfg)
            phi_k = solve_poisson(rho_k, params.poisson)
            trial = GalerkinState(
                rho=rho_k, u=guess_field, phi=phi_k, time=state.time, n_modes=n
            )
            rhs = momentum_old + dt * momentum_rhs(trial, params, law)
            op_k = build_mass_operator(rho_k, n)
            next_coeffs = mass_solve(op_k, rhs)
        except (PositivityLossError, NonPositiveDensityError, FloatingPointError) as exc:
            if residuals:
                # iterates already on the move: the map is not contracting,
                # it walked the trial state out of the feasible set
                raise NoContractionError(
                    f"iterates diverged after {len(residuals)} iterations: {exc}",
                    residuals,
                ) from exc
            raise
        res = float(np.linalg.norm(next_coeffs - guess_coeffs))
        residuals.append(res)
        guess_coeffs = next_coeffs
        guess_field = VectorField(
            tuple(field_from_coeffs(grid, next_coeffs[d]) for d in range(grid.dim))
        )
        if res < tol:
            converged = True
            break
    if not converged:
        raise NoContractionError(
            f"no contraction after {max_iter} iterations "
            f"(last residual {residuals[-1]:.3e}, dt={dt:.3e})",
            residuals,
        )
    rho_new = step_continuity(state.rho, guess_field, cfg)
    phi_new = solve_poisson(rho_new, params.poisson)
    new_state = GalerkinState(
        rho=rho_new, u=guess_field, phi=phi_new, time=state.time + dt, n_modes=n
    )
    return PicardStepResult(state=new_state, iterations=len(residuals), residuals=tuple(residuals))


@dataclass
class Trajectory:
    """A completed (or aborted) run: every state plus sampled diagnostics.

    ``picard_iterations``, ``mass_drift`` and ``divu_sup`` have one entry
    per completed step; ``divu_sup[k]`` is the sup norm of div u for the
    converged velocity that advanced the density on step k, which is the
    quadrature sample the comparison envelope integrates.  ``records``
    holds the sampled diagnostics including step 0 and the final step.
    """

    params: RegularizationParams
    law: PressureLaw
    dt: float
    n_modes: int
    diagnostics_every: int
    states: list = field(default_factory=list)
    picard_iterations: list = field(default_factory=list)
    mass_drift: list = field(default_factory=list)
    divu_sup: list = field(default_factory=list)
    records: list = field(default_factory=list)

    @property
    def final_state(self) -> GalerkinState:
        return self.states[-1]


def _make_record(state, params, law, step, iters, ledger, ent_diss, e_src, s_src):
    ent_now = compute_entropy(state, params, law)
    return DiagnosticsRecord(
        step=step,
        time=state.time,
        energy=compute_energy(state, params, law),
        ledger=ledger,
        entropy=EntropyBreakdown(ent_now.bd_core, ent_now.log_term, ent_diss),
        energy_source=e_src,
        entropy_source=s_src,
        picard_iterations=iters,
        min_rho=state.rho_min,
        max_rho=state.rho_max,
    )


def run_simulation(
    init: GalerkinState,
    params: RegularizationParams,
    law: PressureLaw,
    dt: float,
    t_end: float,
    diagnostics_every: int = 1,
    picard_tol: float = 1e-10,
    picard_max_iter: int = 50,
) -> Trajectory:
    """Walk the system from t=0 data to t_end in uniform steps of dt.

    dt must divide t_end (to one part in 1e9): refinement studies halve dt
    and must land on the same horizon.  Dissipation ledgers and the energy
    source advance every step with the left-endpoint rule, matching the
    scheme's own bookkeeping; the entropy source accumulator uses the
    trapezoid rule, since it is a pure diagnostic and the entropy bound
    compares it against exact endpoint values.  Records are written at
    step 0, every diagnostics_every-th step, and the final step.  A step
    failure raises SimulationAbortedError carrying the partial trajectory.
    """
    if dt <= 0.0 or t_end <= 0.0:
        raise ValueError(f"dt and t_end must be positive, got dt={dt}, t_end={t_end}")
    steps = round(t_end / dt)
    if steps < 1 or abs(steps * dt - t_end) > 1e-9 * max(t_end, 1.0):
        raise ValueError(
            f"dt={dt!r} does not divide t_end={t_end!r}; "
            "choose dt = t_end / n_steps for an integer n_steps"
        )
    if diagnostics_every < 1:
        raise ValueError(f"diagnostics_every must be >= 1, got {diagnostics_every}")

    volume = init.rho.grid.volume
    traj = Trajectory(
        params=params, law=law, dt=dt, n_modes=init.n_modes,
        diagnostics_every=diagnostics_every, states=[init],
    )
    ledger = DissipationLedger.zeros()
    ent_diss = EntropyDissipations.zeros()
    e_src = 0.0
    s_src = 0.0
    traj.records.append(
        _make_record(init, params, law, 0, 0, ledger, ent_diss, e_src, s_src)
    )

    state = init
    s_rate = entropy_source_rate(init, params, law)
    for k in range(steps):
        ledger = ledger.advanced(dissipation_rates(state, params, law), dt)
        ent_diss = ent_diss.advanced(entropy_dissipation_rates(state, params, law), dt)
        e_src += dt * energy_source_rate(state, params)
        mass_before = state.rho.mean() * volume
        try:
            result = picard_step(
                state, dt, params, law, tol=picard_tol, max_iter=picard_max_iter
            )
        except (PositivityLossError, NoContractionError, NonPositiveDensityError) as exc:
            raise SimulationAbortedError(step=k, time=state.time, cause=exc, trajectory=traj)
        state = result.state
        new_rate = entropy_source_rate(state, params, law)
        s_src += 0.5 * dt * (s_rate + new_rate)
        s_rate = new_rate
        traj.states.append(state)
        traj.picard_iterations.append(result.iterations)
        traj.divu_sup.append(float(np.max(np.abs(divergence(state.u).values))))
        traj.mass_drift.append(abs(state.rho.mean() * volume - mass_before))
        if (k + 1) % diagnostics_every == 0 or k + 1 == steps:
            traj.records.append(
                _make_record(
                    state, params, law, k + 1, result.iterations,
                    ledger, ent_diss, e_src, s_src,
                )
            )
    return traj
