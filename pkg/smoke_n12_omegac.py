import time

from becgyro import (
    ModelParams,
    TruncationSpec,
    build_basis,
    HamiltonianModel,
    find_critical_frequency,
)

spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=2)
basis = build_basis(spec)

for gn6, target in ((1.0, 0.823), (0.44, 0.938)):
    g = 6.0 * gn6 / 12.0
    model = HamiltonianModel(ModelParams(g=g, anisotropy=0.03, spec=spec), basis)
    t0 = time.time()
    crit = find_critical_frequency(model, basis, bracket=(0.70, 0.995))
    print(
        f"gN/6={gn6}: omega_c={crit.omega_c:.5f} (target {target}, "
        f"|err|={abs(crit.omega_c-target):.4f})  gap@c={crit.gap_at_critical:.5f} "
        f"min-gap omega={crit.omega_min_gap:.4f} gap={crit.min_gap:.5f} "
        f"evals={crit.evaluations} ({time.time()-t0:.1f}s)"
    )
