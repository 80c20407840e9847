"""Run configuration, JSON round-trip, and initial-data assembly.

A run is fully described by one JSON document: grid, mode count,
regularization coefficients, pressure law, initial data recipe, and the
time-stepping horizon.  Everything a run writes can be replayed from the
config echo it leaves in its output directory.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .continuity import stable_dt_bound
from .grid import (
    SpectralField,
    TorusGrid,
    VectorField,
    dealias,
    galerkin_mode_budget,
    gradient,
    random_field,
    truncate_modes,
)
from .poisson import solve_poisson
from .pressure import PressureLaw
from .snapshot import read_snapshot
from .state import GalerkinState, RegularizationParams

__all__ = [
    "DensityMode",
    "InitialDataSpec",
    "RandomPerturbation",
    "RunConfig",
    "VelocityMode",
    "build_initial_state",
    "check_stability",
    "config_from_json",
    "config_to_json",
    "initial_norms",
    "load_config",
    "save_config",
    "timestep_for_horizon",
]


@dataclass(frozen=True)
class DensityMode:
    """One harmonic bump added to the uniform background."""

    wavevector: tuple
    amplitude: float
    kind: str = "cos"

    def __post_init__(self):
        object.__setattr__(self, "wavevector", tuple(int(k) for k in self.wavevector))
        if self.kind not in ("cos", "sin"):
            raise ValueError(f"mode kind must be 'cos' or 'sin', got {self.kind!r}")
        if not math.isfinite(self.amplitude):
            raise ValueError(f"mode amplitude must be finite, got {self.amplitude}")


@dataclass(frozen=True)
class VelocityMode:
    """One harmonic added to a single velocity component."""

    component: int
    wavevector: tuple
    amplitude: float
    kind: str = "sin"

    def __post_init__(self):
        object.__setattr__(self, "wavevector", tuple(int(k) for k in self.wavevector))
        if self.component < 0:
            raise ValueError(f"component must be >= 0, got {self.component}")
        if self.kind not in ("cos", "sin"):
            raise ValueError(f"mode kind must be 'cos' or 'sin', got {self.kind!r}")
        if not math.isfinite(self.amplitude):
            raise ValueError(f"mode amplitude must be finite, got {self.amplitude}")


@dataclass(frozen=True)
class RandomPerturbation:
    """Seeded band-limited noise: modes up to kmax with decaying spectrum."""

    kmax: int
    amplitude: float

    def __post_init__(self):
        if self.kmax < 1:
            raise ValueError(f"kmax must be >= 1, got {self.kmax}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0.0):
            raise ValueError(f"amplitude must be finite and >= 0, got {self.amplitude}")


_INITIAL_KINDS = ("UniformPlusModes", "FromSnapshot")


@dataclass(frozen=True)
class InitialDataSpec:
    """Recipe for the t=0 fields.

    UniformPlusModes: uniform background plus listed harmonics plus
    optional seeded noise.  FromSnapshot: density (and optionally velocity
    components) read back from snapshot files.  Either way the assembled
    density must stay at or above the floor everywhere.
    """

    kind: str = "UniformPlusModes"
    base_density: float = 1.0
    density_modes: tuple = ()
    velocity_modes: tuple = ()
    floor: float = 0.1
    density_snapshot: str | None = None
    velocity_snapshots: tuple = ()
    random_density: RandomPerturbation | None = None
    random_velocity: RandomPerturbation | None = None

    def __post_init__(self):
        if self.kind not in _INITIAL_KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        if not (math.isfinite(self.base_density) and self.base_density > 0.0):
            raise ValueError(f"base density must be positive, got {self.base_density}")
        if not (math.isfinite(self.floor) and self.floor > 0.0):
            raise ValueError(f"density floor must be positive, got {self.floor}")
        object.__setattr__(self, "density_modes", tuple(self.density_modes))
        object.__setattr__(self, "velocity_modes", tuple(self.velocity_modes))
        object.__setattr__(self, "velocity_snapshots", tuple(self.velocity_snapshots))
        if self.kind == "FromSnapshot" and not self.density_snapshot:
            raise ValueError("FromSnapshot needs a density_snapshot path")


@dataclass(frozen=True)
class RunConfig:
    """Everything one trajectory run needs, serializable to JSON."""

    dim: int
    points: int
    n_modes: int
    params: RegularizationParams
    law: PressureLaw
    initial: InitialDataSpec
    dt: float
    t_end: float
    period: float = 2.0 * math.pi
    diagnostics_every: int = 1
    seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.points < 4:
            raise ValueError(f"need at least 4 points per axis, got {self.points}")
        if not (math.isfinite(self.period) and self.period > 0.0):
            raise ValueError(f"period must be positive, got {self.period}")
        budget = galerkin_mode_budget(self.grid)
        if not 1 <= self.n_modes <= budget:
            raise ValueError(
                f"n_modes={self.n_modes} outside [1, {budget}] (dealias budget)"
            )
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        steps = round(self.t_end / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_end) > 1e-9 * max(self.t_end, 1.0):
            raise ValueError(f"dt={self.dt!r} does not divide t_end={self.t_end!r}")
        if self.diagnostics_every < 1:
            raise ValueError(
                f"diagnostics_every must be >= 1, got {self.diagnostics_every}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid.cubic(self.dim, self.points, period=self.period)

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)


# ---------------------------------------------------------------------------
# serialization

def _spec_to_dict(spec: InitialDataSpec) -> dict:
    d = asdict(spec)
    d["density_modes"] = [
        {"wavevector": list(m.wavevector), "amplitude": m.amplitude, "kind": m.kind}
        for m in spec.density_modes
    ]
    d["velocity_modes"] = [
        {"component": m.component, "wavevector": list(m.wavevector),
         "amplitude": m.amplitude, "kind": m.kind}
        for m in spec.velocity_modes
    ]
    d["velocity_snapshots"] = list(spec.velocity_snapshots)
    return d


def _spec_from_dict(d: dict) -> InitialDataSpec:
    rd = d.get("random_density")
    rv = d.get("random_velocity")
    return InitialDataSpec(
        kind=d.get("kind", "UniformPlusModes"),
        base_density=d.get("base_density", 1.0),
        density_modes=tuple(
            DensityMode(tuple(m["wavevector"]), m["amplitude"], m.get("kind", "cos"))
            for m in d.get("density_modes", ())
        ),
        velocity_modes=tuple(
            VelocityMode(m["component"], tuple(m["wavevector"]),
                         m["amplitude"], m.get("kind", "sin"))
            for m in d.get("velocity_modes", ())
        ),
        floor=d.get("floor", 0.1),
        density_snapshot=d.get("density_snapshot"),
        velocity_snapshots=tuple(d.get("velocity_snapshots", ())),
        random_density=RandomPerturbation(**rd) if rd else None,
        random_velocity=RandomPerturbation(**rv) if rv else None,
    )


def config_to_json(config: RunConfig) -> str:
    d = {
        "format_version": 1,
        "dim": config.dim,
        "points": config.points,
        "n_modes": config.n_modes,
        "params": asdict(config.params),
        "law": asdict(config.law),
        "initial": _spec_to_dict(config.initial),
        "dt": config.dt,
        "t_end": config.t_end,
        "period": config.period,
        "diagnostics_every": config.diagnostics_every,
        "seed": config.seed,
        "output_dir": config.output_dir,
    }
    return json.dumps(d, indent=2) + "\n"


def config_from_json(text: str) -> RunConfig:
    d = json.loads(text)
    version = d.get("format_version", 1)
    if version != 1:
        raise ValueError(f"unsupported config format_version {version!r}")
    return RunConfig(
        dim=d["dim"],
        points=d["points"],
        n_modes=d["n_modes"],
        params=RegularizationParams(**d["params"]),
        law=PressureLaw(**d["law"]),
        initial=_spec_from_dict(d["initial"]),
        dt=d["dt"],
        t_end=d["t_end"],
        period=d.get("period", 2.0 * math.pi),
        diagnostics_every=d.get("diagnostics_every", 1),
        seed=d.get("seed", 0),
        output_dir=d.get("output_dir"),
    )


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(config_to_json(config))


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return config_from_json(fh.read())


# ---------------------------------------------------------------------------
# initial data

def _assemble_uniform_plus_modes(spec, grid, rng):
    rho = SpectralField.constant(grid, spec.base_density)
    for m in spec.density_modes:
        rho = rho + SpectralField.harmonic(grid, m.wavevector, m.amplitude, m.kind)
    if spec.random_density is not None and spec.random_density.amplitude > 0.0:
        rho = rho + random_field(
            grid, rng, spec.random_density.kmax, spec.random_density.amplitude
        )
    comps = [SpectralField.zeros(grid) for _ in range(grid.dim)]
    for m in spec.velocity_modes:
        if m.component >= grid.dim:
            raise ValueError(
                f"velocity mode component {m.component} out of range for dim {grid.dim}"
            )
        comps[m.component] = comps[m.component] + SpectralField.harmonic(
            grid, m.wavevector, m.amplitude, m.kind
        )
    if spec.random_velocity is not None and spec.random_velocity.amplitude > 0.0:
        for i in range(grid.dim):
            comps[i] = comps[i] + random_field(
                grid, rng, spec.random_velocity.kmax, spec.random_velocity.amplitude
            )
    return rho, comps


def _assemble_from_snapshot(spec, grid):
    rho = read_snapshot(spec.density_snapshot)
    if rho.grid != grid:
        raise ValueError(
            f"density snapshot grid {rho.grid.points} does not match run grid {grid.points}"
        )
    comps = [SpectralField.zeros(grid) for _ in range(grid.dim)]
    if spec.velocity_snapshots:
        if len(spec.velocity_snapshots) != grid.dim:
            raise ValueError(
                f"{len(spec.velocity_snapshots)} velocity snapshots for dim {grid.dim}"
            )
        for i, path in enumerate(spec.velocity_snapshots):
            c = read_snapshot(path)
            if c.grid != grid:
                raise ValueError(f"velocity snapshot {i} grid mismatch")
            comps[i] = c
    return rho, comps


def build_initial_state(
    spec: InitialDataSpec,
    grid: TorusGrid,
    n_modes: int,
    params: RegularizationParams,
    seed: int = 0,
) -> GalerkinState:
    """Assemble t=0 fields: density on the dealiased grid, velocity in X_n.

    The density is verified against the spec's floor pointwise; the
    potential is solved from the assembled density.
    """
    rng = np.random.default_rng(seed)
    if spec.kind == "UniformPlusModes":
        rho, comps = _assemble_uniform_plus_modes(spec, grid, rng)
    else:
        rho, comps = _assemble_from_snapshot(spec, grid)
    rho = dealias(rho)
    vals = rho.values
    m = float(vals.min())
    if m < spec.floor:
        idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
        point = tuple(float(c[idx]) for c in grid.coordinates)
        raise ValueError(
            f"initial density minimum {m:.6e} at x={point} is below the floor {spec.floor}"
        )
    u = VectorField(tuple(truncate_modes(c, n_modes) for c in comps))
    phi = solve_poisson(rho, params.poisson)
    return GalerkinState(rho=rho, u=u, phi=phi, time=0.0, n_modes=n_modes)


def initial_norms(state: GalerkinState, law: PressureLaw) -> dict:
    """The integrability-class numbers of the t=0 data, for the run header."""
    grid = state.rho.grid
    dV = grid.cell_volume
    rv = state.rho.values
    speed_sq = sum(c.values**2 for c in state.u)
    grad_sqrt_sq = sum(g.values**2 for g in gradient(
        SpectralField.from_values(grid, np.sqrt(rv))
    ))
    return {
        "mass": float(np.sum(rv)) * dV,
        "density_lgamma": (float(np.sum(rv**law.gamma)) * dV) ** (1.0 / law.gamma),
        "kinetic_energy": 0.5 * float(np.sum(rv * speed_sq)) * dV,
        "sqrt_rho_u_l2": math.sqrt(float(np.sum(rv * speed_sq)) * dV),
        "grad_sqrt_rho_l2": math.sqrt(float(np.sum(grad_sqrt_sq)) * dV),
        "min_density": float(rv.min()),
        "max_density": float(rv.max()),
    }


# ---------------------------------------------------------------------------
# time step selection

def check_stability(config: RunConfig, state: GalerkinState) -> None:
    """Reject dt above the advective bound evaluated on the t=0 velocity."""
    u_max = math.sqrt(float(max(
        np.max(sum(c.values**2 for c in state.u)), 0.0
    )))
    bound = stable_dt_bound(state.rho.grid, u_max)
    if config.dt > bound:
        raise ValueError(
            f"dt={config.dt:.6g} violates the stability rule: bound {bound:.6g} "
            f"at u_max={u_max:.6g}"
        )


def timestep_for_horizon(grid: TorusGrid, u_max: float, t_end: float) -> float:
    """Largest dt that divides t_end while satisfying the stability rule."""
    if not (math.isfinite(t_end) and t_end > 0.0):
        raise ValueError(f"t_end must be positive, got {t_end}")
    bound = stable_dt_bound(grid, u_max)
    n_steps = max(1, math.ceil(t_end / bound - 1e-12))
    return t_end / n_steps
