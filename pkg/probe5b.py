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
from becgyro.states import angular_momentum_moments, l_distribution, spdm

for n in (6, 12):
    spec = TruncationSpec(n_particles=n, l_max=n + 4)
    basis = build_basis(spec)
    model = HamiltonianModel(ModelParams(g=6.0 / n, anisotropy=0.03, spec=spec),
                             basis, cache_dir="cache")
    for treatment in ("perturbative", "exact"):
        crit = find_critical_frequency(model, basis, bracket=(0.70, 0.98),
                                       treatment=treatment)
        if treatment == "perturbative":
            ground = perturbative_ground(model, crit.omega_c, k=1).ground
        else:
            ground = lowest_eigenpairs(model.assemble(crit.omega_c), k=1).ground
        dist = l_distribution(ground)
        body = " ".join(f"L{int(l)}:{w:.3f}" for l, w in sorted(dist.items()) if w > 5e-3)
        mean, _, var = angular_momentum_moments(ground)
        nat = spdm(ground)
        pops = np.sort(nat.populations)[::-1][:3] / n
        print(f"N={n} {treatment:13s} om_c {crit.omega_c:.5f} mean_L {mean:6.3f} "
              f"dL2 {var:7.3f} nat {np.round(pops, 3)}")
        print(f"    {body}")
