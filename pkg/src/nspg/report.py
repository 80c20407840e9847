"""Render a diagnostics CSV into plot-ready tables and figures.

Consumes only the on-disk CSV (never live trajectories), so reports can
be regenerated long after a run.  Output is a derived CSV with the
headline series, a plain-text summary, and four PNG figures rendered
with the Agg backend; nothing here opens a window.

The derived quantities stay descriptive: ``energy_budget`` is the signed
drift E(t) + D(t) - E(0), which the scheme keeps below its accumulated
source term, and ``entropy_growth`` is the raw increase over the initial
value.  Verdicts about the inequalities belong to the diagnostics
module, which sees the source accumulators the CSV does not carry.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import CSV_COLUMNS

__all__ = [
    "ENERGY_COLUMNS",
    "ENTROPY_DISSIPATION_COLUMNS",
    "LEDGER_COLUMNS",
    "REPORT_COLUMNS",
    "read_diagnostics_csv",
    "report_series",
    "write_report",
]

ENERGY_COLUMNS = ("kinetic", "internal", "cold", "hyper", "poisson_signed")
LEDGER_COLUMNS = (
    "visc", "drag0", "drag1", "hypervisc", "press_diff", "cold_diff", "biharm",
)
ENTROPY_DISSIPATION_COLUMNS = (
    "density_laplacian",
    "drag_density_gradient",
    "cold_gradient",
    "velocity_gradient",
    "pressure_gradient",
    "density_biharmonic",
)

REPORT_COLUMNS = (
    "time",
    "total_energy",
    "dissipated_total",
    "energy_budget",
    "entropy_value",
    "entropy_dissipated_total",
    "entropy_growth",
    "min_rho",
    "max_rho",
    "picard_iterations",
)


def read_diagnostics_csv(path) -> dict:
    """Load a diagnostics CSV into column arrays keyed by name.

    The header must match the writer's schema exactly; anything else is
    rejected rather than guessed at, since a silently misread column
    would corrupt every derived quantity downstream.
    """
    path = Path(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError(
            f"{path}: header does not match the diagnostics schema "
            f"({','.join(CSV_COLUMNS)})"
        )
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: row {i} has {len(parts)} fields, expected {len(CSV_COLUMNS)}")
        rows.append([float(p) for p in parts])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=float)
    out = {name: table[:, j].copy() for j, name in enumerate(CSV_COLUMNS)}
    out["picard_iterations"] = out["picard_iterations"].astype(int)
    return out


def report_series(data: dict) -> dict:
    """Derive the headline series of REPORT_COLUMNS from raw columns."""
    dissipated = sum(data[c] for c in LEDGER_COLUMNS)
    entropy_value = data["bd_core"] + data["log_term"]
    entropy_dissipated = sum(data[c] for c in ENTROPY_DISSIPATION_COLUMNS)
    return {
        "time": data["time"],
        "total_energy": data["total"],
        "dissipated_total": dissipated,
        "energy_budget": data["total"] + dissipated - data["total"][0],
        "entropy_value": entropy_value,
        "entropy_dissipated_total": entropy_dissipated,
        "entropy_growth": entropy_value - entropy_value[0],
        "min_rho": data["min_rho"],
        "max_rho": data["max_rho"],
        "picard_iterations": data["picard_iterations"],
    }


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_report_csv(series: dict, path: Path) -> None:
    lines = [",".join(REPORT_COLUMNS)]
    n = len(series["time"])
    for i in range(n):
        lines.append(",".join(_fmt(series[c][i]) for c in REPORT_COLUMNS))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_summary(data: dict, series: dict, path: Path) -> None:
    t = series["time"]
    budget = series["energy_budget"]
    k_drift = int(np.argmax(budget))
    lines = [
        f"records: {len(t)}",
        f"time span: {_fmt(t[0])} .. {_fmt(t[-1])}",
        "initial energy: "
        + ", ".join(f"{c}={_fmt(data[c][0])}" for c in ENERGY_COLUMNS + ("total",)),
        "final energy: "
        + ", ".join(f"{c}={_fmt(data[c][-1])}" for c in ENERGY_COLUMNS + ("total",)),
        "dissipated by final record: "
        + ", ".join(f"{c}={_fmt(data[c][-1])}" for c in LEDGER_COLUMNS)
        + f", total={_fmt(series['dissipated_total'][-1])}",
        f"energy budget drift: max={_fmt(budget[k_drift])} at t={_fmt(t[k_drift])}",
        "entropy value: "
        + f"initial={_fmt(series['entropy_value'][0])}, "
        + f"final={_fmt(series['entropy_value'][-1])}, "
        + f"max growth={_fmt(float(np.max(series['entropy_growth'])))}",
        "density range: "
        + f"[{_fmt(float(np.min(data['min_rho'])))}, {_fmt(float(np.max(data['max_rho'])))}]",
        f"picard iterations: max={int(np.max(data['picard_iterations']))}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _figure_energy(data, series, path):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for c in ENERGY_COLUMNS:
        ax.plot(data["time"], data[c], label=c, linewidth=1.2)
    ax.plot(data["time"], data["total"], label="total", color="black", linewidth=2.0)
    ax.set_xlabel("time")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _figure_dissipation(data, series, path):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for c in LEDGER_COLUMNS:
        ax.plot(data["time"], data[c], label=c, linewidth=1.2)
    ax.plot(
        data["time"], series["dissipated_total"],
        label="total", color="black", linewidth=2.0,
    )
    ax.set_xlabel("time")
    ax.set_ylabel("accumulated dissipation")
    ax.legend(fontsize=8, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _figure_entropy(data, series, path):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(data["time"], series["entropy_value"], label="value", color="black", linewidth=2.0)
    for c in ENTROPY_DISSIPATION_COLUMNS:
        ax.plot(data["time"], data[c], label=c, linewidth=1.0)
    ax.set_xlabel("time")
    ax.set_ylabel("entropy functional")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _figure_density(data, series, path):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.fill_between(
        data["time"], data["min_rho"], data["max_rho"], alpha=0.25, label="density range",
    )
    ax.plot(data["time"], data["min_rho"], linewidth=1.0)
    ax.plot(data["time"], data["max_rho"], linewidth=1.0)
    ax.set_xlabel("time")
    ax.set_ylabel("density")
    ax.grid(True, alpha=0.3)
    twin = ax.twinx()
    twin.step(
        data["time"], data["picard_iterations"],
        where="post", color="tab:red", linewidth=1.0, label="picard iterations",
    )
    twin.set_ylabel("picard iterations")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = twin.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_report(csv_path, out_dir=None) -> list:
    """Render report.csv, summary.txt and the four figures; return paths."""
    csv_path = Path(csv_path)
    out = Path(out_dir) if out_dir is not None else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    data = read_diagnostics_csv(csv_path)
    series = report_series(data)
    written = []

    p = out / "report.csv"
    _write_report_csv(series, p)
    written.append(p)
    p = out / "summary.txt"
    _write_summary(data, series, p)
    written.append(p)

    for name, draw in (
        ("energy.png", _figure_energy),
        ("dissipation.png", _figure_dissipation),
        ("entropy.png", _figure_entropy),
        ("density.png", _figure_density),
    ):
        p = out / name
        draw(data, series, p)
        written.append(p)
    return written
