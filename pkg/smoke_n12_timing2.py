import time

import numpy as np

from becgyro import (
    IntegratorConfig,
    ManyBodyState,
    ModelParams,
    RampSchedule,
    TruncationSpec,
    build_basis,
    HamiltonianModel,
    anisotropy_continuation_map,
    free_evolution,
    integrate_tdse,
)

spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=2)
basis = build_basis(spec)
model = HamiltonianModel(ModelParams(g=6.0 * 0.44 / 12.0, anisotropy=0.03, spec=spec), basis)
eig = model.isotropic_eigenbasis()

# worst-case sudden leg: 0.005 jump at gamma 5e-4 -> duration 10
psi = eig.eigenstate_fock(eig.ground_index(0.938))
state = ManyBodyState(basis=basis, amplitudes=psi)
sched = RampSchedule.linear(0.938, 0.933, 5.0e-4)
t0 = time.time()
res = integrate_tdse(model, basis, state, sched, IntegratorConfig())
print(
    f"sudden leg T={sched.total_time:.0f}: {time.time()-t0:.1f}s steps {res.steps_accepted} "
    f"rej {res.steps_rejected} drift {res.norm_drift:.2e} fid {res.fidelity_vs_initial:.6f}"
)

# free evolution tau=10 via expm path
t0 = time.time()
ev = free_evolution(res.state, model, basis, 0.933, 10.0)
print(f"free_evolution tau=10 (expm): {time.time()-t0:.1f}s norm {ev.norm():.12f}")

t0 = time.time()
vectors, labels, iso_idx = anisotropy_continuation_map(model, 0.938)
print(f"continuation map full dim: {time.time()-t0:.1f}s shape {vectors.shape}")
comp = np.abs(vectors.T @ res.state.amplitudes) ** 2
print(f"completeness {comp.sum():.12f}  l_labels head {labels[:6]}")
