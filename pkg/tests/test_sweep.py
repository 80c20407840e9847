"""Limit sweeps: plans, level runs, distances, and trend reports."""

import json
import os

import numpy as np
import pytest

from nspg.config import DensityMode, InitialDataSpec, RunConfig, VelocityMode
from nspg.pressure import PressureLaw
from nspg.state import RegularizationParams
from nspg.sweep import (
    CAUCHY_FIELDS,
    ColdPressureTrend,
    LevelResult,
    SweepPlan,
    SweepReport,
    cauchy_distance,
    cold_pressure_vanishing,
    level_config,
    measured_order,
    run_sweep,
)

GAMMA2 = PressureLaw(kind="PurePower", gamma=2.0, a=1.0)


def base_config(**overrides):
    fields = dict(
        dim=1,
        points=32,
        n_modes=7,
        params=RegularizationParams(epsilon=1e-2, mu=1e-2, eta=1e-3, delta=1e-3,
                                    r0=1e-3, r1=0.1, lambda_sign=-1, G=1.0),
        law=GAMMA2,
        initial=InitialDataSpec(
            base_density=1.0,
            density_modes=(DensityMode((1,), 0.1),),
            velocity_modes=(VelocityMode(0, (1,), 0.05),),
            floor=0.5,
        ),
        dt=0.025,
        t_end=0.25,
        seed=0,
    )
    fields.update(overrides)
    return RunConfig(**fields)


def rest_config(**overrides):
    return base_config(initial=InitialDataSpec(base_density=1.0, floor=0.5), **overrides)


class TestSweepPlan:
    def test_rejects_unknown_stage(self):
        with pytest.raises(ValueError, match="stage"):
            SweepPlan(stage="Gamma", values=(1e-2, 1e-3), base_config=base_config())

    def test_mode_values_must_be_increasing_ints(self):
        cfg = base_config()
        with pytest.raises(ValueError, match="increasing"):
            SweepPlan(stage="ModeGrowth", values=(7, 5), base_config=cfg)
        with pytest.raises(ValueError, match="integers"):
            SweepPlan(stage="ModeGrowth", values=(5.0, 7.0), base_config=cfg)
        with pytest.raises(ValueError, match="budget"):
            SweepPlan(stage="ModeGrowth", values=(5, 99), base_config=cfg)

    def test_coefficient_values_must_decrease_toward_zero(self):
        cfg = base_config()
        with pytest.raises(ValueError, match="decrease"):
            SweepPlan(stage="EpsilonMu", values=(1e-3, 1e-2), base_config=cfg)
        with pytest.raises(ValueError, match=">= 0"):
            SweepPlan(stage="Eta", values=(0.0, -1e-3), base_config=cfg)
        with pytest.raises(ValueError, match="positive"):
            SweepPlan(stage="Eta", values=(0.0,) * 2, base_config=cfg)
        SweepPlan(stage="Eta", values=(1e-3, 5e-4, 0.0), base_config=cfg)

    def test_needs_at_least_two_values(self):
        with pytest.raises(ValueError, match="2 values"):
            SweepPlan(stage="Eta", values=(1e-3,), base_config=base_config())

    def test_delta_stage_requires_cleared_upstream_knobs(self):
        dirty = base_config()
        with pytest.raises(ValueError, match="epsilon=mu=eta=0"):
            SweepPlan(stage="DeltaR0", values=(1e-2, 5e-3), base_config=dirty)
        clean = base_config(params=RegularizationParams(
            delta=1e-2, r0=1e-2, r1=0.1, lambda_sign=-1, G=1.0))
        SweepPlan(stage="DeltaR0", values=(1e-2, 5e-3), base_config=clean)


class TestLevelConfig:
    def test_substitutions_respect_stage_ties(self):
        cfg = base_config()
        plan = SweepPlan(stage="EpsilonMu", values=(1e-2, 5e-3), base_config=cfg)
        lvl = level_config(plan, 5e-3)
        assert lvl.params.epsilon == 5e-3
        assert lvl.params.mu == 5e-3
        assert lvl.params.eta == cfg.params.eta
        assert lvl.n_modes == cfg.n_modes

        plan = SweepPlan(stage="Eta", values=(1e-3, 5e-4), base_config=cfg)
        assert level_config(plan, 5e-4).params.eta == 5e-4

        clean = base_config(params=RegularizationParams(
            delta=1e-2, r0=1e-2, lambda_sign=-1, G=1.0))
        plan = SweepPlan(stage="DeltaR0", values=(1e-2, 5e-3), base_config=clean)
        lvl = level_config(plan, 5e-3)
        assert lvl.params.delta == 5e-3
        assert lvl.params.r0 == 5e-3

        plan = SweepPlan(stage="ModeGrowth", values=(5, 9), base_config=cfg)
        assert level_config(plan, 9).n_modes == 9


class TestRunSweep:
    def test_mode_growth_on_rest_data_is_degenerate(self):
        plan = SweepPlan(stage="ModeGrowth", values=(3, 5, 7), base_config=rest_config())
        report = run_sweep(plan, max_workers=1)
        assert report.complete
        for field in CAUCHY_FIELDS:
            assert report.cauchy[field] == (0.0, 0.0)
            assert report.cauchy_trend[field] is True
        assert all(report.uniform.values())

    def test_epsilon_weighted_dissipations_scale_linearly(self):
        values = (1e-2, 5e-3, 2.5e-3)
        plan = SweepPlan(stage="EpsilonMu", values=values, base_config=base_config())
        report = run_sweep(plan, max_workers=1)
        assert report.complete
        for key in ("press_diff", "biharm"):
            qs = [lv.extras[key] for lv in report.levels]
            order = measured_order(values, qs)
            assert 0.8 <= order <= 1.2, (key, order, qs)

    def test_delta_drag_ledger_scales_with_coefficient(self):
        clean = base_config(params=RegularizationParams(
            delta=1e-2, r0=1e-2, r1=0.1, lambda_sign=-1, G=1.0))
        values = (1e-2, 5e-3, 2.5e-3)
        plan = SweepPlan(stage="DeltaR0", values=values, base_config=clean)
        report = run_sweep(plan, max_workers=1)
        assert report.complete
        qs = [lv.extras["drag0"] for lv in report.levels]
        assert measured_order(values, qs) >= 0.9
        assert qs[0] > qs[1] > qs[2]

    def test_eta_trend_reaches_exact_zero(self):
        plan = SweepPlan(stage="Eta", values=(1e-3, 5e-4, 0.0), base_config=base_config())
        report = run_sweep(plan, max_workers=1)
        trend = cold_pressure_vanishing(report)
        assert trend.decreasing
        assert trend.failing_index is None
        assert trend.quantities[-1] == 0.0
        assert trend.quantities[0] > trend.quantities[1] > 0.0

    def test_eta_cold_mass_scales_linearly(self):
        values = (1e-3, 5e-4, 2.5e-4)
        plan = SweepPlan(stage="Eta", values=values, base_config=base_config())
        report = run_sweep(plan, max_workers=1)
        qs = [lv.extras["cold_pressure_mass"] for lv in report.levels]
        assert measured_order(values, qs) >= 0.9

    def test_partial_report_on_level_abort(self):
        # kmax jumps from 2 to 5 between levels; the explicit stiffness at
        # kmax=5 breaks contraction for this dt while kmax=2 is fine
        cfg = base_config(
            params=RegularizationParams(epsilon=1e-3, mu=0.05, lambda_sign=-1, G=1.0),
            dt=0.1, t_end=0.5,
        )
        plan = SweepPlan(stage="ModeGrowth", values=(5, 11), base_config=cfg)
        report = run_sweep(plan, max_workers=1)
        assert not report.complete
        assert not report.levels[0].failed
        assert report.levels[1].failed
        assert "aborted" in report.levels[1].failure
        for field in CAUCHY_FIELDS:
            assert report.cauchy[field] == ()

    def test_report_identical_across_worker_counts(self):
        plan = SweepPlan(stage="EpsilonMu", values=(1e-2, 5e-3, 2.5e-3),
                         base_config=base_config())
        a = run_sweep(plan, max_workers=1)
        b = run_sweep(plan, max_workers=3)
        assert a.to_json() == b.to_json()

    def test_returned_trajectories_align_with_levels(self):
        cfg = base_config(
            params=RegularizationParams(epsilon=1e-3, mu=0.05, lambda_sign=-1, G=1.0),
            dt=0.1, t_end=0.5,
        )
        plan = SweepPlan(stage="ModeGrowth", values=(5, 11), base_config=cfg)
        report, trajs = run_sweep(plan, max_workers=1, return_trajectories=True)
        assert len(trajs) == len(report.levels) == 2
        assert trajs[0] is not None and trajs[0].n_modes == 5
        assert trajs[1] is None and report.levels[1].failed

    def test_report_honors_thread_env_cap(self):
        plan = SweepPlan(stage="Eta", values=(1e-3, 5e-4), base_config=base_config())
        old = os.environ.get("NSP_THREADS")
        os.environ["NSP_THREADS"] = "2"
        try:
            report = run_sweep(plan)
        finally:
            if old is None:
                del os.environ["NSP_THREADS"]
            else:
                os.environ["NSP_THREADS"] = old
        assert report.complete

    def test_json_is_reproducible_and_parseable(self):
        plan = SweepPlan(stage="EpsilonMu", values=(1e-2, 5e-3), base_config=base_config())
        a = run_sweep(plan, max_workers=1)
        b = run_sweep(plan, max_workers=1)
        assert a.to_json() == b.to_json()
        doc = json.loads(a.to_json())
        assert doc["stage"] == "EpsilonMu"
        assert len(doc["levels"]) == 2
        assert doc["levels"][0]["norms"]["sup_rho_l1"] > 0.0
        assert doc["complete"] is True

    def test_uniform_flags_survive_truncating_the_finest_level(self):
        values = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
        full = run_sweep(SweepPlan(stage="EpsilonMu", values=values,
                                   base_config=base_config()), max_workers=1)
        part = run_sweep(SweepPlan(stage="EpsilonMu", values=values[:-1],
                                   base_config=base_config()), max_workers=1)
        for name, flag in full.uniform.items():
            if flag:
                assert part.uniform[name], name


class TestCauchyDistance:
    def trajectories(self, amps):
        out = []
        for amp in amps:
            cfg = base_config(initial=InitialDataSpec(
                base_density=1.0,
                density_modes=(DensityMode((1,), 0.1),),
                velocity_modes=(VelocityMode(0, (1,), amp),),
                floor=0.5,
            ))
            plan = SweepPlan(stage="Eta", values=(1e-3, 5e-4), base_config=cfg)
            lvl = level_config(plan, 1e-3)
            from nspg.config import build_initial_state
            from nspg.galerkin import run_simulation
            state = build_initial_state(lvl.initial, lvl.grid, lvl.n_modes, lvl.params)
            out.append(run_simulation(state, lvl.params, lvl.law, lvl.dt, lvl.t_end))
        return out

    def test_identical_trajectories_give_zero(self):
        a, b = self.trajectories([0.05, 0.05])
        for field in CAUCHY_FIELDS:
            assert cauchy_distance(a, b, field) == 0.0

    def test_symmetric(self):
        a, b = self.trajectories([0.05, 0.06])
        for field in CAUCHY_FIELDS:
            assert cauchy_distance(a, b, field) == cauchy_distance(b, a, field)
            assert cauchy_distance(a, b, field) > 0.0

    def test_triangle_inequality(self):
        a, b, c = self.trajectories([0.04, 0.05, 0.06])
        for field in CAUCHY_FIELDS:
            dab = cauchy_distance(a, b, field)
            dbc = cauchy_distance(b, c, field)
            dac = cauchy_distance(a, c, field)
            assert dac <= dab + dbc + 1e-12

    def test_incompatible_trajectories_rejected(self):
        a, b = self.trajectories([0.05, 0.05])
        b_short = type(b)(params=b.params, law=b.law, dt=b.dt, n_modes=b.n_modes,
                          diagnostics_every=b.diagnostics_every,
                          states=b.states[:-1], picard_iterations=b.picard_iterations,
                          mass_drift=b.mass_drift, divu_sup=b.divu_sup,
                          records=b.records)
        with pytest.raises(ValueError, match="incompatible"):
            cauchy_distance(a, b_short, "rho")
        with pytest.raises(ValueError, match="field"):
            cauchy_distance(a, b, "vorticity")


class TestColdPressureVanishing:
    def fake_report(self, quantities, stage="Eta"):
        values = tuple(1e-3 / 2**k for k in range(len(quantities)))
        levels = tuple(
            LevelResult(label=f"eta={v!r}", value=v, failed=False, failure=None,
                        norms=None, extras={"cold_pressure_mass": q})
            for v, q in zip(values, quantities)
        )
        return SweepReport(stage=stage, values=values, levels=levels,
                           cauchy={}, cauchy_trend={}, uniform={}, complete=True)

    def test_wrong_stage_rejected(self):
        report = self.fake_report([1.0, 0.5, 0.25], stage="EpsilonMu")
        with pytest.raises(ValueError, match="Eta"):
            cold_pressure_vanishing(report)

    def test_too_few_values_rejected(self):
        with pytest.raises(ValueError, match="3"):
            cold_pressure_vanishing(self.fake_report([1.0, 0.5]))

    def test_injected_non_monotone_sequence_fails_with_index(self):
        trend = cold_pressure_vanishing(self.fake_report([1.0, 0.5, 0.7, 0.1]))
        assert isinstance(trend, ColdPressureTrend)
        assert not trend.decreasing
        assert trend.failing_index == 2


class TestMeasuredOrder:
    def test_recovers_exact_power_laws(self):
        v = [1e-2, 5e-3, 2.5e-3]
        assert measured_order(v, [3.0 * x for x in v]) == pytest.approx(1.0, abs=1e-10)
        assert measured_order(v, [x**2 for x in v]) == pytest.approx(2.0, abs=1e-10)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError, match="positive"):
            measured_order([1e-2, 5e-3], [1.0, 0.0])
        with pytest.raises(ValueError, match="at least 2"):
            measured_order([1e-2], [1.0])
