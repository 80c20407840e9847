"""Compare left-endpoint vs trapezoid entropy-source accumulation on the standard run."""
from nspg.config import build_initial_state, load_config
from nspg.diagnostics import compute_energy, compute_entropy, entropy_source_rate
from nspg.galerkin import run_simulation

cfg = load_config("configs/standard_run.json")
state0 = build_initial_state(cfg.initial, cfg.grid, cfg.n_modes, cfg.params, cfg.seed)
traj = run_simulation(state0, cfg.params, cfg.law, cfg.dt, cfg.t_end)
params, law = cfg.params, cfg.law
dt = cfg.dt

rates = [entropy_source_rate(s, params, law) for s in traj.states]
values = []
kin = []
for s in traj.states:
    e = compute_entropy(s, params, law)
    values.append(e.bd_core + e.log_term)
    kin.append(compute_energy(s, params, law).kinetic)

b0, k0 = values[0], kin[0]
acc_left = 0.0
acc_trap = 0.0
print("step  value     margin_left  margin_trap")
worst_l = worst_t = -1e30
for k in range(len(values)):
    rhs_l = 2.0 * b0 + (kin[k] - k0) + acc_left
    rhs_t = 2.0 * b0 + (kin[k] - k0) + acc_trap
    ml = values[k] - rhs_l
    mt = values[k] - rhs_t
    worst_l = max(worst_l, ml)
    worst_t = max(worst_t, mt)
    print(f"{k:4d}  {values[k]:8.4f}  {ml:11.4f}  {mt:11.4f}")
    if k + 1 < len(values):
        acc_left += dt * rates[k]
        acc_trap += 0.5 * dt * (rates[k] + rates[k + 1])
print(f"\nworst left={worst_l:.4e}  worst trap={worst_t:.4e}")
