import time

import numpy as np

from becgyro import (
    IntegratorConfig,
    ManyBodyState,
    ModelParams,
    TruncationSpec,
    build_basis,
    HamiltonianModel,
    free_evolution,
    lowest_eigenpairs,
    sudden_shift,
    sudden_validity_bound,
)

spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=2)
basis = build_basis(spec)

for gn6, omega_c in ((1.0, 0.823), (0.44, 0.938)):
    g = 6.0 * gn6 / 12.0
    model = HamiltonianModel(ModelParams(g=g, anisotropy=0.03, spec=spec), basis)
    sol = lowest_eigenpairs(model.assemble(omega_c), k=1)
    prepared = sol.ground
    bound = sudden_validity_bound(prepared, 0.5e-3)
    print(f"gN/6={gn6}: omega_c={omega_c} validity bound {bound:.4f}")
    for ext in (0.001, 0.002, 0.0024):
        t0 = time.time()
        res = sudden_shift(prepared, model, basis, omega_c, omega_c - ext,
                           gamma_max=0.5e-3, cfg=IntegratorConfig())
        print(f"  ext={ext}: fid {res.fidelity_vs_initial:.5f}  "
              f"T={res.total_time:.1f} steps {res.steps_accepted} "
              f"({time.time()-t0:.1f}s)")
