import numpy as np

from becgyro import (
    HamiltonianModel,
    ModelParams,
    TruncationSpec,
    build_basis,
    find_critical_frequency,
    plan_adiabatic_ramp,
)

for n in (4, 6, 8, 10):
    spec = TruncationSpec(n_particles=n, l_max=n + 4)
    basis = build_basis(spec)
    model = HamiltonianModel(ModelParams(g=3.6 / n, anisotropy=0.03, spec=spec),
                             basis, cache_dir="cache")
    crit_p = find_critical_frequency(model, basis, bracket=(0.60, 0.995),
                                     treatment="perturbative")
    plan = plan_adiabatic_ramp(model, basis, 0.4, crit_p.omega_c)
    gaps = np.array(plan.segment_gaps)
    k = int(np.argmin(gaps))
    contrib = np.array([seg.duration for seg in plan.segments])
    j = int(np.argmax(contrib))
    print(f"N={n} om_c {crit_p.omega_c:.5f} T {plan.total_time:9.1f} "
          f"min_gap {gaps.min():.5f} (seg {k + 1}/{len(gaps)}) "
          f"dominant seg {j + 1} with {contrib[j]:.0f} "
          f"last4 gaps {np.round(gaps[-4:], 4)}")
