import time

import numpy as np

from becgyro import (
    HamiltonianModel,
    ModelParams,
    TruncationSpec,
    angular_momentum_moments,
    build_basis,
    find_critical_frequency,
    perturbative_ground,
    plan_adiabatic_ramp,
)


def make_model(n, g):
    spec = TruncationSpec(n_particles=n, l_max=n + 4)
    basis = build_basis(spec)
    return HamiltonianModel(ModelParams(g=g, anisotropy=0.03, spec=spec),
                            basis, cache_dir="cache")


print("== criterion 5: dL^2 vs N at perturbative omega_c, gN/6=1 ==", flush=True)
ns = [4, 6, 8, 10, 12]
var_l = []
for n in ns:
    t0 = time.time()
    model = make_model(n, 6.0 / n)
    crit = find_critical_frequency(model, model.basis, bracket=(0.60, 0.99),
                                   treatment="perturbative")
    ground = perturbative_ground(model, crit.omega_c, k=1).ground
    _, _, dl = angular_momentum_moments(ground)
    var_l.append(dl**2)
    print(f"  N={n:2d} dim {model.basis.dimension:5d} omega_c {crit.omega_c:.5f} "
          f"dL^2 {dl**2:.4f}  ({time.time()-t0:.1f}s)", flush=True)
slope = np.polyfit(np.log(ns), np.log(var_l), 1)[0]
print(f"  log-log slope {slope:.3f} (target 2.0 +- 0.4)", flush=True)

print("== criterion 8a: ramp duration vs g at N=6 ==", flush=True)
durations_g = []
for x in (0.3, 0.5, 0.75, 1.0):
    t0 = time.time()
    model = make_model(6, x)
    crit = find_critical_frequency(model, model.basis, bracket=(0.60, 0.995),
                                   treatment="perturbative")
    plan = plan_adiabatic_ramp(model, model.basis, 0.4, crit.omega_c,
                               treatment="perturbative")
    durations_g.append(plan.total_time)
    print(f"  gN/6={x:.2f} omega_c {crit.omega_c:.5f} duration "
          f"{plan.total_time:.1f} = {plan.seconds():.2f}s "
          f"feasible16 {plan.feasible()} ({time.time()-t0:.1f}s)", flush=True)
print(f"  monotone in g: {all(a < b for a, b in zip(durations_g, durations_g[1:]))}",
      flush=True)

print("== criterion 8b: ramp duration vs N at gN/6=1.0 ==", flush=True)
durations_n = []
for n in (4, 6, 8, 10, 12):
    t0 = time.time()
    model = make_model(n, 6.0 / n)
    crit = find_critical_frequency(model, model.basis, bracket=(0.60, 0.995),
                                   treatment="perturbative")
    plan = plan_adiabatic_ramp(model, model.basis, 0.4, crit.omega_c,
                               treatment="perturbative")
    durations_n.append(plan.total_time)
    print(f"  N={n} omega_c {crit.omega_c:.5f} duration {plan.total_time:.1f} "
          f"= {plan.seconds():.2f}s feasible16 {plan.feasible()} "
          f"({time.time()-t0:.1f}s)", flush=True)
print(f"  monotone in N: {all(a < b for a, b in zip(durations_n, durations_n[1:]))}",
      flush=True)
