import time

import numpy as np

from becgyro import (
    HamiltonianModel,
    ModelParams,
    ProtocolConfig,
    TruncationSpec,
    build_basis,
    estimate_precision,
    find_critical_frequency,
    run_protocol,
)
from becgyro.metrology import ideal_phase_family, qfi_pure, qfi_quadratic_approx
from becgyro.spectrum import perturbative_ground

t0 = time.time()
spec = TruncationSpec(n_particles=12, l_max=16)
basis = build_basis(spec)
model = HamiltonianModel(ModelParams(g=0.22, anisotropy=0.03, spec=spec),
                         basis, cache_dir="cache")
crit = find_critical_frequency(model, basis, bracket=(0.88, 0.99),
                               treatment="perturbative")
prepared = perturbative_ground(model, crit.omega_c, k=1).ground
print(f"omega_c {crit.omega_c:.5f} ({time.time()-t0:.1f}s)")

print("part A: quadratic QFI vs finite-difference QFI")
for tau in (0.25, 0.5, 1.0):
    family = ideal_phase_family(model, basis, prepared, crit.omega_c, tau,
                                treatment="perturbative")
    exact = qfi_pure(family, 0.0)
    approx = qfi_quadratic_approx(prepared, tau)
    print(f"  tau {tau:4.2f} qfi_pure {exact:10.4f} quadratic {approx:10.4f} "
          f"ratio {exact/approx:.4f}")

print("part B: Cramer-Rao check, instantaneous coupling, tau=10")
grid = np.linspace(-0.005, 0.005, 9)
cfg = ProtocolConfig(tau=10.0, omega_ext_grid=grid, omega_c=crit.omega_c,
                     treatment="perturbative", readout_mode="adiabatic",
                     sudden_mode="instantaneous")
res = run_protocol(cfg, model, basis)
family = ideal_phase_family(model, basis, prepared, crit.omega_c, 10.0,
                            treatment="perturbative")
for scheme in ("l_moment", "binomial"):
    curve = estimate_precision(res, scheme=scheme)
    vals = []
    for om, do, div in zip(curve.omega_ext, curve.delta_omega, curve.divergent):
        if div:
            continue
        fq = qfi_pure(family, float(om))
        vals.append(do * np.sqrt(fq))
    print(f"  {scheme}: min dOmega*sqrt(F_Q) {min(vals):.4f} "
          f"max {max(vals):.4f}")
print(f"total {time.time()-t0:.1f}s")
