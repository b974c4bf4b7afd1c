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
    integrate_tdse,
)

t0 = time.time()
spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=2)
basis = build_basis(spec)
print(f"basis dim {basis.dimension}  ({time.time()-t0:.2f}s)")

t0 = time.time()
model = HamiltonianModel(ModelParams(g=6.0 * 0.44 / 12.0, anisotropy=0.03, spec=spec), basis)
model.v_op
print(f"tensor+ops  ({time.time()-t0:.2f}s)")

t0 = time.time()
eig = model.isotropic_eigenbasis()
print(f"eigenbasis build  ({time.time()-t0:.2f}s)")

rng = np.random.default_rng(0)
y = rng.normal(size=basis.dimension) + 1j * rng.normal(size=basis.dimension)
y /= np.linalg.norm(y)
t0 = time.time()
reps = 50
for _ in range(reps):
    out = eig.apply_w(y)
dt = (time.time() - t0) / reps
print(f"apply_w: {dt*1e3:.2f} ms/call")

# one short sudden-style integration: hold near omega_c for duration 2
psi = eig.eigenstate_fock(eig.ground_index(0.9))
state = ManyBodyState(basis=basis, amplitudes=psi)
sched = RampSchedule.linear(0.9, 0.902, 1.0e-3)
t0 = time.time()
res = integrate_tdse(model, basis, state, sched, IntegratorConfig())
print(
    f"ramp dur {sched.total_time:.1f}: {time.time()-t0:.2f}s  steps {res.steps_accepted} "
    f"rej {res.steps_rejected} drift {res.norm_drift:.2e}"
)
