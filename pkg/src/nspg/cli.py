"""Command-line front end.

Five subcommands cover the workflows the library supports: `run` a
single configured trajectory to disk, `sweep` a family of runs toward a
regularization limit, `check-identities` for the pointwise structure
checks on random or stored fields, `certify-pressure` for the envelope
certificate of a pressure law, and `report` to render a diagnostics CSV
into tables and figures.

Exit codes: 0 on success, 1 for anything wrong with the invocation or
its inputs, 2 when a run aborts mid-trajectory.  A FAIL verdict from a
certificate or identity check is a result, not an error, and exits 0.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import (
    RunConfig,
    build_initial_state,
    check_stability,
    config_from_json,
    initial_norms,
    load_config,
    save_config,
)
from .diagnostics import IDENTITY_KINDS, check_identity, write_diagnostics_csv
from .galerkin import SimulationAbortedError, run_simulation
from .grid import SpectralField, TorusGrid, VectorField, random_field
from .pressure import PressureLaw, certify_envelope
from .report import write_report
from .snapshot import SnapshotFormatError, read_snapshot, write_snapshot
from .state import RegularizationParams
from .sweep import STAGES, SweepPlan, run_sweep

__all__ = ["cli_main", "main"]


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on bad usage instead of the default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# run

def _write_trajectory(out: Path, cfg: RunConfig, traj, aborted=None) -> None:
    write_diagnostics_csv(traj.records, out / "diagnostics.csv")
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    final = traj.final_state
    write_snapshot(final.rho, snaps / "rho.nspf")
    write_snapshot(final.phi, snaps / "phi.nspf")
    for i, comp in enumerate(final.u):
        write_snapshot(comp, snaps / f"u{i}.nspf")
    meta = {
        "format_version": 1,
        "steps_completed": len(traj.states) - 1,
        "steps_planned": cfg.n_steps,
        "final_time": final.time,
        "records": len(traj.records),
        "initial_norms": initial_norms(traj.states[0], cfg.law),
        "max_mass_drift": max(traj.mass_drift, default=0.0),
        "max_divu_sup": max(traj.divu_sup, default=0.0),
        "max_picard_iterations": max(traj.picard_iterations, default=0),
        "aborted": aborted,
    }
    with open(out / "meta.json", "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _fail(f"cannot load config {args.config}: {exc}")
    out = args.output if args.output is not None else cfg.output_dir
    if out is None:
        return _fail("no output directory: pass --output or set output_dir in the config")
    out = Path(out)
    try:
        state = build_initial_state(cfg.initial, cfg.grid, cfg.n_modes, cfg.params, cfg.seed)
        check_stability(cfg, state)
    except (ValueError, SnapshotFormatError, OSError) as exc:
        return _fail(str(exc))

    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    try:
        traj = run_simulation(
            state, cfg.params, cfg.law, cfg.dt, cfg.t_end, cfg.diagnostics_every
        )
    except SimulationAbortedError as exc:
        _write_trajectory(
            out, cfg, exc.trajectory,
            aborted={"step": exc.step, "time": exc.time, "cause": str(exc.cause)},
        )
        print(f"aborted at step {exc.step} (t={exc.time:.6g}): {exc.cause}", file=sys.stderr)
        print(f"partial trajectory written to {out}")
        return 2
    _write_trajectory(out, cfg, traj)
    print(
        f"completed {cfg.n_steps} steps to t={traj.final_state.time:.6g}, "
        f"{len(traj.records)} records written to {out}"
    )
    return 0


# ---------------------------------------------------------------------------
# sweep

def _load_plan(path: Path):
    with open(path) as fh:
        d = json.load(fh)
    stage = d["stage"]
    if stage not in STAGES:
        raise ValueError(f"unknown sweep stage {stage!r}; expected one of {STAGES}")
    base = d["base_config"]
    if isinstance(base, str):
        base_path = Path(base)
        if not base_path.is_absolute():
            base_path = path.parent / base_path
        cfg = load_config(base_path)
    else:
        cfg = config_from_json(json.dumps(base))
    cast = int if stage == "ModeGrowth" else float
    values = tuple(cast(v) for v in d["values"])
    return SweepPlan(stage=stage, values=values, base_config=cfg), d


def _cmd_sweep(args) -> int:
    plan_path = Path(args.plan)
    try:
        plan, plan_dict = _load_plan(plan_path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _fail(f"cannot load sweep plan {args.plan}: {exc}")
    out = args.output if args.output is not None else plan.base_config.output_dir
    if out is None:
        return _fail("no output directory: pass --output or set output_dir in the base config")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    report, trajectories = run_sweep(
        plan, max_workers=args.workers, return_trajectories=True
    )
    with open(out / "plan.json", "w", newline="\n") as fh:
        json.dump(plan_dict, fh, indent=2)
        fh.write("\n")
    with open(out / "sweep_report.json", "w", newline="\n") as fh:
        fh.write(report.to_json())
    for i, (level, traj) in enumerate(zip(report.levels, trajectories)):
        if traj is not None:
            write_diagnostics_csv(traj.records, out / f"level_{i}.csv")
    for level in report.levels:
        status = f"FAILED ({level.failure})" if level.failed else "ok"
        print(f"{level.label}: {status}")
    print(f"sweep report written to {out}")
    return 0 if report.complete else 2


# ---------------------------------------------------------------------------
# check-identities

def _identity_fields(args):
    """Yield (label, rho, u) pairs: stored snapshots or seeded random fields."""
    if args.snapshot is not None:
        rho = read_snapshot(args.snapshot)
        grid = rho.grid
        if len(args.velocity or []) != grid.dim:
            raise ValueError(
                f"need exactly {grid.dim} --velocity files for a {grid.dim}d snapshot"
            )
        comps = []
        for vp in args.velocity:
            c = read_snapshot(vp)
            if c.grid != grid:
                raise ValueError(f"{vp}: velocity grid does not match the density snapshot")
            comps.append(c)
        yield "snapshot", rho, VectorField(tuple(comps))
        return
    grid = TorusGrid.cubic(args.dim, args.points)
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        rho = SpectralField.constant(grid, 1.0) + random_field(
            grid, rng, kmax=4, amplitude=0.2
        )
        u = VectorField(
            tuple(random_field(grid, rng, kmax=4, amplitude=0.3) for _ in range(grid.dim))
        )
        yield f"seed {seed}", rho, u


def _cmd_check_identities(args) -> int:
    params = RegularizationParams(
        epsilon=args.epsilon, eta=args.eta, delta=args.delta
    )
    try:
        law = PressureLaw(gamma=args.gamma, a=args.a, b=args.b)
        cases = list(_identity_fields(args))
    except (ValueError, OSError, SnapshotFormatError) as exc:
        return _fail(str(exc))

    worst = {kind: 0.0 for kind in IDENTITY_KINDS}
    for _, rho, u in cases:
        for kind in IDENTITY_KINDS:
            worst[kind] = max(worst[kind], check_identity(kind, rho, u, params, law))
    all_pass = True
    for kind in IDENTITY_KINDS:
        verdict = "PASS" if worst[kind] < args.tolerance else "FAIL"
        all_pass = all_pass and verdict == "PASS"
        print(f"{kind}: max residual {worst[kind]:.3e} over {len(cases)} field sets {verdict}")
    print("all identities within tolerance" if all_pass else "identity residuals exceed tolerance")
    return 0


# ---------------------------------------------------------------------------
# certify-pressure

def _cmd_certify_pressure(args) -> int:
    try:
        law = PressureLaw(
            kind=args.kind, gamma=args.gamma, a=args.a, b=args.b,
            amp=args.amp, freq=args.freq,
        )
        rep = certify_envelope(law, z_max=args.z_max, n_samples=args.samples)
    except ValueError as exc:
        return _fail(str(exc))
    verdict = "PASS" if rep.passed else "FAIL"
    print(
        f"{verdict}: margin {rep.margin:.6e} at z={rep.worst_z:.6e} "
        f"({rep.n_samples} samples up to z_max={args.z_max})"
    )
    return 0


# ---------------------------------------------------------------------------
# report

def _cmd_report(args) -> int:
    src = Path(args.input)
    if src.is_dir():
        src = src / "diagnostics.csv"
    try:
        written = write_report(src, args.output)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    for p in written:
        print(f"wrote {p}")
    return 0


# ---------------------------------------------------------------------------
# wiring

def build_parser() -> _Parser:
    parser = _Parser(prog="nspg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one configured trajectory to disk")
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--output", help="output directory (default: config output_dir)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a regularization-limit sweep")
    p.add_argument("--plan", required=True, help="sweep plan JSON")
    p.add_argument("--output", help="output directory (default: base config output_dir)")
    p.add_argument("--workers", type=int, help="max concurrent levels (default: NSP_THREADS)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser(
        "check-identities", help="evaluate the pointwise work/flux identities"
    )
    p.add_argument("--dim", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--points", type=int, default=64, help="grid points per axis")
    p.add_argument("--seeds", type=int, default=5, help="number of random field sets")
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--snapshot", help="density snapshot to check instead of random fields")
    p.add_argument(
        "--velocity", action="append",
        help="velocity component snapshot (repeat once per dimension)",
    )
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--eta", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--gamma", type=float, default=5.0 / 3.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.0)
    p.set_defaults(func=_cmd_check_identities)

    p = sub.add_parser("certify-pressure", help="certify a pressure law's envelope")
    p.add_argument("--kind", default="PerturbedNonMonotone",
                   choices=("PurePower", "PerturbedNonMonotone"))
    p.add_argument("--gamma", type=float, default=5.0 / 3.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.1)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--freq", type=float, default=1.0)
    p.add_argument("--z-max", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=4096)
    p.set_defaults(func=_cmd_certify_pressure)

    p = sub.add_parser("report", help="render a diagnostics CSV to tables and figures")
    p.add_argument("--input", required=True, help="diagnostics CSV or run directory")
    p.add_argument("--output", help="output directory (default: alongside the input)")
    p.set_defaults(func=_cmd_report)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


def main() -> None:
    sys.exit(cli_main())
