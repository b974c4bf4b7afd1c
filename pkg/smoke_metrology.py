"""End-to-end protocol rehearsal at small N."""
import time

import numpy as np

from becgyro import (TruncationSpec, ModelParams, HamiltonianModel, build_basis,
                     ProtocolConfig, run_protocol, estimate_precision,
                     find_critical_frequency, perturbative_ground,
                     qfi_pure, qfi_quadratic_approx, ideal_phase_family,
                     shot_noise_limit)

N = 6
spec = TruncationSpec(n_particles=N, l_max=N + 4, n_ll_max=2, even_parity=True)
basis = build_basis(spec)
print("dim", basis.dimension)

g = 6.0 * 0.44 / N
model = HamiltonianModel(params=ModelParams(g=g, anisotropy=0.03, spec=spec), basis=basis)

t0 = time.time()
crit = find_critical_frequency(model, basis, (0.80, 0.99), treatment="perturbative")
print(f"omega_c (perturbative) {crit.omega_c:.5f} in {time.time()-t0:.1f}s")

grid = tuple(np.linspace(-0.005, 0.005, 7))
for readout in ("adiabatic", "integrated"):
    t0 = time.time()
    cfg = ProtocolConfig(tau=10.0, omega_ext_grid=grid, omega_c=crit.omega_c,
                         treatment="perturbative", readout_mode=readout,
                         switch_off_duration=60.0 if readout == "integrated" else None)
    res = run_protocol(cfg, model, basis)
    dt = time.time() - t0
    print(f"readout={readout}: {dt:.1f}s completeness {res.completeness.min():.6f} "
          f"fid_in [{res.sudden_fidelity_in.min():.5f},{res.sudden_fidelity_in.max():.5f}] "
          f"leak max {res.readout_leakage.max():.2e}")
    for scheme in ("l_moment", "binomial"):
        curve = estimate_precision(res, scheme)
        ok = curve.delta_omega_scaled[~curve.divergent]
        print(f"  {scheme}: tau*dOmega min {ok.min():.4f} max {ok.max():.4f} "
              f"shot {1/np.sqrt(N):.4f} divergent {int(curve.divergent.sum())}")

# QFI consistency on the prepared state
prepared = perturbative_ground(model, crit.omega_c, k=1).ground
for tau in (0.5, 1.0):
    fam = ideal_phase_family(model, basis, prepared, crit.omega_c, tau)
    f_q = qfi_pure(fam, 0.0)
    f_approx = qfi_quadratic_approx(prepared, tau)
    print(f"tau={tau}: qfi_pure {f_q:.4f} quadratic {f_approx:.4f} "
          f"ratio {f_q/f_approx:.4f}")
