"""Standard-run probe: energy inequality margins and entropy bound."""
import time

from nspg.config import build_initial_state, load_config
from nspg.diagnostics import check_energy_inequality, check_entropy_bound
from nspg.galerkin import run_simulation

cfg = load_config("configs/standard_run.json")
t0 = time.time()
state0 = build_initial_state(cfg.initial, cfg.grid, cfg.n_modes, cfg.params, cfg.seed)
traj = run_simulation(state0, cfg.params, cfg.law, cfg.dt, cfg.t_end)
print(f"run: {time.time() - t0:.1f}s, {len(traj.states) - 1} steps")

C = 60.0
rep = check_energy_inequality(traj, C * cfg.dt**2)
print(f"energy: passed={rep.passed} worst={rep.worst_margin:.3e} raw={rep.worst_raw_margin:.3e}")

ent = check_entropy_bound(traj)
print(f"entropy: passed={ent.passed} worst={ent.worst_margin:.3e} "
      f"at step {ent.worst_step} t={ent.worst_time:.3f}")

e0 = traj.records[0]
print("\nstep time   value    2*b0+trans+src   margin")
b0 = e0.entropy.value
k0 = e0.energy.kinetic
for rec in traj.records:
    rhs = 2.0 * b0 + (rec.energy.kinetic - k0) + rec.entropy_source
    print(f"{rec.step:3d} {rec.time:5.2f}  {rec.entropy.value:8.4f}  {rhs:12.4f}  "
          f"{rec.entropy.value - rhs:9.4f}")
