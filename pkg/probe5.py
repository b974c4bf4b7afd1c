import time

import numpy as np

from becgyro import (
    HamiltonianModel,
    ModelParams,
    TruncationSpec,
    build_basis,
    find_critical_frequency,
    lowest_eigenpairs,
)
from becgyro.spectrum import perturbative_ground
from becgyro.states import angular_momentum_moments

for n, om_lo, om_hi in ((6, 0.80, 0.90), (12, 0.80, 0.90)):
    spec = TruncationSpec(n_particles=n, l_max=n + 4)
    basis = build_basis(spec)
    model = HamiltonianModel(ModelParams(g=6.0 / n, anisotropy=0.03, spec=spec),
                             basis, cache_dir="cache")
    t0 = time.time()
    crit_p = find_critical_frequency(model, basis, bracket=(0.70, 0.98),
                                     treatment="perturbative")
    crit_e = find_critical_frequency(model, basis, bracket=(0.70, 0.98),
                                     treatment="exact")
    print(f"N={n} omega_c pert {crit_p.omega_c:.5f} exact {crit_e.omega_c:.5f} "
          f"({time.time()-t0:.0f}s)")
    for om in np.linspace(om_lo, om_hi, 11):
        gp = perturbative_ground(model, om, k=1).ground
        ge = lowest_eigenpairs(model.assemble(om), k=1).ground
        _, _, v_p = angular_momentum_moments(gp)
        _, _, v_e = angular_momentum_moments(ge)
        print(f"  om {om:.3f} dL2 pert {v_p:8.3f} exact {v_e:8.3f}")
    for label, om in (("pert", crit_p.omega_c), ("exact", crit_e.omega_c)):
        gp = perturbative_ground(model, om, k=1).ground
        ge = lowest_eigenpairs(model.assemble(om), k=1).ground
        _, _, v_p = angular_momentum_moments(gp)
        _, _, v_e = angular_momentum_moments(ge)
        print(f"  at {label} omega_c {om:.5f}: dL2 pert {v_p:8.3f} exact {v_e:8.3f}")
