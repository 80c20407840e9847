"""Regularization-limit sweeps: run families of trajectories toward a limit.

Each sweep stage relaxes one knob toward its limit (more modes; ε=μ → 0;
η → 0; δ=r₀ → 0, tied exactly as the sequential limit passages tie them)
while the rest of the configuration is held fixed.  The report tracks the
solution-class norms for uniform boundedness, Cauchy-style distances
between consecutive levels as convergence proxies, and per-stage scalars
(the fading dissipation channels).  Proxies are proxies: the report never
claims a limit object, only trends.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from statistics import median

import numpy as np

from .config import RunConfig, build_initial_state
from .diagnostics import SolutionClassNorms, solution_class_norms
from .galerkin import SimulationAbortedError, Trajectory, run_simulation
from .grid import galerkin_mode_budget

__all__ = [
    "CAUCHY_FIELDS",
    "ColdPressureTrend",
    "LevelResult",
    "STAGES",
    "SweepPlan",
    "SweepReport",
    "cauchy_distance",
    "cold_pressure_vanishing",
    "level_config",
    "measured_order",
    "run_sweep",
]

STAGES = ("ModeGrowth", "EpsilonMu", "Eta", "DeltaR0")
CAUCHY_FIELDS = ("rho", "momentum", "sqrt_rho_u")


@dataclass(frozen=True)
class SweepPlan:
    """An ordered walk of one parameter toward its limit.

    values: mode counts (increasing) for ModeGrowth; coefficient values
    (decreasing toward 0) otherwise.  EpsilonMu sets ε=μ to each value,
    DeltaR0 sets δ=r₀; a DeltaR0 plan requires ε=μ=η=0 in the base config,
    matching the order the limits are taken in.
    """

    stage: str
    values: tuple
    base_config: RunConfig

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown sweep stage {self.stage!r}; expected one of {STAGES}")
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError(f"a sweep needs at least 2 values, got {len(vals)}")
        if self.stage == "ModeGrowth":
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in vals):
                raise ValueError("ModeGrowth values must be integers")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"mode counts must be strictly increasing, got {vals}")
            budget = galerkin_mode_budget(self.base_config.grid)
            if vals[0] < 1 or vals[-1] > budget:
                raise ValueError(
                    f"mode counts must lie in [1, {budget}] (dealias budget), got {vals}"
                )
        else:
            if not all(math.isfinite(float(v)) and float(v) >= 0.0 for v in vals):
                raise ValueError(f"coefficient values must be finite and >= 0, got {vals}")
            if float(vals[0]) <= 0.0:
                raise ValueError("the first (coarsest) coefficient value must be positive")
            if any(float(b) >= float(a) for a, b in zip(vals, vals[1:])):
                raise ValueError(
                    f"coefficient values must decrease strictly toward 0, got {vals}"
                )
        if self.stage == "DeltaR0":
            p = self.base_config.params
            if p.epsilon != 0.0 or p.mu != 0.0 or p.eta != 0.0:
                raise ValueError(
                    "a DeltaR0 plan must declare epsilon=mu=eta=0 in its base config "
                    "(that limit is taken after the earlier ones)"
                )


def level_config(plan: SweepPlan, value) -> RunConfig:
    """The base config with one level's parameter value substituted."""
    cfg = plan.base_config
    if plan.stage == "ModeGrowth":
        return replace(cfg, n_modes=int(value))
    v = float(value)
    if plan.stage == "EpsilonMu":
        params = replace(cfg.params, epsilon=v, mu=v)
    elif plan.stage == "Eta":
        params = replace(cfg.params, eta=v)
    else:
        params = replace(cfg.params, delta=v, r0=v)
    return replace(cfg, params=params)


def _level_label(stage: str, value) -> str:
    names = {"ModeGrowth": "n", "EpsilonMu": "epsilon=mu", "Eta": "eta", "DeltaR0": "delta=r0"}
    return f"{names[stage]}={value!r}"


@dataclass(frozen=True)
class LevelResult:
    label: str
    value: object
    failed: bool
    failure: str | None
    norms: SolutionClassNorms | None
    extras: dict


@dataclass(frozen=True)
class SweepReport:
    """Aggregated sweep outcome; serializes bit-reproducibly to JSON."""

    stage: str
    values: tuple
    levels: tuple
    cauchy: dict
    cauchy_trend: dict
    uniform: dict
    complete: bool

    def as_dict(self) -> dict:
        return {
            "format_version": 1,
            "stage": self.stage,
            "values": list(self.values),
            "levels": [
                {
                    "label": lv.label,
                    "value": lv.value,
                    "failed": lv.failed,
                    "failure": lv.failure,
                    "norms": None if lv.norms is None else {
                        f.name: getattr(lv.norms, f.name)
                        for f in fields(SolutionClassNorms)
                    },
                    "extras": dict(lv.extras),
                }
                for lv in self.levels
            ],
            "cauchy": {k: list(v) for k, v in self.cauchy.items()},
            "cauchy_trend": dict(self.cauchy_trend),
            "uniform": dict(self.uniform),
            "complete": self.complete,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


def _worker_count(n_jobs: int, max_workers) -> int:
    if max_workers is None:
        env = os.environ.get("NSP_THREADS", "")
        if env.strip():
            max_workers = int(env)
        else:
            max_workers = os.cpu_count() or 1
    if max_workers < 1:
        raise ValueError(f"worker count must be >= 1, got {max_workers}")
    return min(max_workers, n_jobs)


def _quad(grid, vals) -> float:
    return float(np.sum(vals)) * grid.cell_volume


def _stage_extras(stage: str, cfg: RunConfig, traj: Trajectory) -> dict:
    final_ledger = traj.records[-1].ledger
    if stage == "EpsilonMu":
        return {
            "press_diff": final_ledger.press_diff,
            "cold_diff": final_ledger.cold_diff,
            "biharm": final_ledger.biharm,
        }
    if stage == "Eta":
        eta = cfg.params.eta
        if eta == 0.0:
            return {"cold_pressure_mass": 0.0}
        grid = traj.states[0].rho.grid
        acc = 0.0
        for state in traj.states[:-1]:
            acc += traj.dt * _quad(grid, state.rho.values**-6)
        return {"cold_pressure_mass": eta * acc}
    if stage == "DeltaR0":
        return {"drag0": final_ledger.drag0, "biharm": final_ledger.biharm}
    return {}


def _run_level(plan: SweepPlan, value):
    cfg = level_config(plan, value)
    state = build_initial_state(cfg.initial, cfg.grid, cfg.n_modes, cfg.params, cfg.seed)
    label = _level_label(plan.stage, value)
    try:
        traj = run_simulation(
            state, cfg.params, cfg.law, cfg.dt, cfg.t_end, cfg.diagnostics_every
        )
    except SimulationAbortedError as exc:
        return LevelResult(
            label=label, value=value, failed=True, failure=str(exc),
            norms=None, extras={},
        ), None
    norms = solution_class_norms(traj)
    extras = _stage_extras(plan.stage, cfg, traj)
    return LevelResult(
        label=label, value=value, failed=False, failure=None,
        norms=norms, extras=extras,
    ), traj


def run_sweep(plan: SweepPlan, max_workers=None, return_trajectories=False):
    """Execute every level, then reduce in plan order.

    Levels run concurrently (cap with the NSP_THREADS environment
    variable); the reduction is ordered, so the report is identical
    regardless of scheduling.  A level abort yields a partial report with
    the failure annotated and complete=False.  With return_trajectories
    the (report, trajectories) pair comes back, trajectories aligned with
    the levels and None where a level failed.
    """
    workers = _worker_count(len(plan.values), max_workers)
    if workers == 1:
        outs = [_run_level(plan, v) for v in plan.values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(lambda v: _run_level(plan, v), plan.values))
    levels = tuple(out[0] for out in outs)
    trajectories = [out[1] for out in outs]

    cauchy = {}
    for field_name in CAUCHY_FIELDS:
        dists = []
        for a, b in zip(trajectories, trajectories[1:]):
            if a is not None and b is not None:
                dists.append(cauchy_distance(a, b, field_name))
        cauchy[field_name] = tuple(dists)
    cauchy_trend = {
        k: (all(d2 <= d1 + 1e-15 for d1, d2 in zip(v, v[1:])) if len(v) >= 2 else None)
        for k, v in cauchy.items()
    }

    uniform = {}
    for f in fields(SolutionClassNorms):
        vals = [getattr(lv.norms, f.name) for lv in levels if lv.norms is not None]
        if not vals:
            uniform[f.name] = False
        else:
            uniform[f.name] = bool(max(vals) <= 3.0 * median(vals))

    report = SweepReport(
        stage=plan.stage,
        values=plan.values,
        levels=levels,
        cauchy=cauchy,
        cauchy_trend=cauchy_trend,
        uniform=uniform,
        complete=all(not lv.failed for lv in levels),
    )
    if return_trajectories:
        return report, trajectories
    return report


def cauchy_distance(traj_a: Trajectory, traj_b: Trajectory, field: str) -> float:
    """Discrete L2(0,T; L2) distance between two runs' derived fields.

    field: 'rho', 'momentum' (ρu), or 'sqrt_rho_u' (√ρ u).  Left-endpoint
    rule in time, grid quadrature in space; trajectories must share grid,
    dt, and horizon.
    """
    if field not in CAUCHY_FIELDS:
        raise ValueError(f"unknown field {field!r}; expected one of {CAUCHY_FIELDS}")
    if not traj_a.states or not traj_b.states:
        raise ValueError("cannot compare empty trajectories")
    grid = traj_a.states[0].rho.grid
    if grid != traj_b.states[0].rho.grid:
        raise ValueError("trajectories live on different grids")
    if traj_a.dt != traj_b.dt or len(traj_a.states) != len(traj_b.states):
        raise ValueError(
            f"incompatible trajectories: dt {traj_a.dt} vs {traj_b.dt}, "
            f"{len(traj_a.states)} vs {len(traj_b.states)} states"
        )
    total = 0.0
    for sa, sb in zip(traj_a.states[:-1], traj_b.states[:-1]):
        if field == "rho":
            diff_sq = (sa.rho.values - sb.rho.values) ** 2
        elif field == "momentum":
            diff_sq = sum(
                (sa.rho.values * ca.values - sb.rho.values * cb.values) ** 2
                for ca, cb in zip(sa.u, sb.u)
            )
        else:
            ra = np.sqrt(sa.rho.values)
            rb = np.sqrt(sb.rho.values)
            diff_sq = sum(
                (ra * ca.values - rb * cb.values) ** 2
                for ca, cb in zip(sa.u, sb.u)
            )
        total += float(np.sum(diff_sq))
    return math.sqrt(total * grid.cell_volume * traj_a.dt)


@dataclass(frozen=True)
class ColdPressureTrend:
    """η ∫∫ ρ⁻⁶ along an Eta sweep and whether it decays monotonically."""

    values: tuple
    quantities: tuple
    decreasing: bool
    failing_index: int | None


def cold_pressure_vanishing(report: SweepReport) -> ColdPressureTrend:
    """Check that the cold-pressure mass fades with η on an Eta-stage report."""
    if report.stage != "Eta":
        raise ValueError(f"cold pressure trend needs an Eta-stage report, got {report.stage!r}")
    if len(report.values) < 3:
        raise ValueError(f"need at least 3 sweep values, got {len(report.values)}")
    quantities = []
    for lv in report.levels:
        if lv.failed:
            raise ValueError(f"level {lv.label} failed: {lv.failure}")
        quantities.append(lv.extras["cold_pressure_mass"])
    failing = None
    for k in range(1, len(quantities)):
        if quantities[k] > quantities[k - 1] * (1.0 + 1e-9) + 1e-15:
            failing = k
            break
    return ColdPressureTrend(
        values=tuple(report.values),
        quantities=tuple(quantities),
        decreasing=failing is None,
        failing_index=failing,
    )


def measured_order(values, quantities) -> float:
    """Least-squares slope of log(quantity) against log(value).

    The scaling exponent of a fading channel: 1.0 means linear in the
    swept coefficient.
    """
    v = np.asarray([float(x) for x in values])
    q = np.asarray([float(x) for x in quantities])
    if len(v) != len(q) or len(v) < 2:
        raise ValueError("need matching lists of at least 2 points")
    if np.any(v <= 0.0) or np.any(q <= 0.0):
        raise ValueError("order measurement needs strictly positive data")
    slope, _ = np.polyfit(np.log(v), np.log(q), 1)
    return float(slope)
