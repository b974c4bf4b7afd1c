"""Fan and equal-population flip in the richer Landau truncation."""
import sys
import time

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh

from becgyro import (
    TruncationSpec,
    ModelParams,
    HamiltonianModel,
    build_basis,
    lowest_eigenpairs,
    parity_imbalance,
    two_mode_project,
)

NLL = int(sys.argv[1]) if len(sys.argv) > 1 else 3

t0 = time.time()
spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=NLL, even_parity=True)
basis = build_basis(spec)
print(f"basis dim {basis.dimension} ({time.time()-t0:.1f}s)", flush=True)

for g, lo, hi in ((0.5, 0.80, 0.88), (0.22, 0.88, 0.99)):
    t0 = time.time()
    model = HamiltonianModel(params=ModelParams(g=g, anisotropy=0.03, spec=spec), basis=basis)
    h_iso = model.assemble(0.0, anisotropy_scale=0.0)
    print(f"g={g}: assembled in {time.time()-t0:.1f}s nnz {h_iso.matrix.nnz}", flush=True)

    # fan: lowest energy per momentum block of the isotropic problem
    t0 = time.time()
    e_block = {}
    for L, rng in sorted(basis.blocks.items()):
        sub = h_iso.matrix[rng.start:rng.stop, rng.start:rng.stop]
        if sub.shape[0] < 600:
            vals = np.linalg.eigvalsh(sub.toarray())[:1]
        else:
            vals = eigsh(sub, k=1, which="SA", return_eigenvectors=False, tol=1e-9)
        e_block[L] = float(vals[0])
    fan = {L: (e_block[L] - e_block[0]) / L for L in sorted(e_block) if L}
    print(f"  fan ({time.time()-t0:.1f}s):", {L: round(w, 5) for L, w in fan.items()}, flush=True)

    def imbalance(omega):
        t1 = time.time()
        sol = lowest_eigenpairs(model.assemble(omega), k=2)
        val = parity_imbalance(sol.ground)
        gap = sol.eigenvalues[1] - sol.eigenvalues[0]
        print(f"    omega={omega:.5f} imb {val:+.4f} gap {gap:.5f} ({time.time()-t1:.1f}s)", flush=True)
        return val

    # coarse scan then bisection
    t0 = time.time()
    grid = np.linspace(lo, hi, 7)
    vals = [imbalance(w) for w in grid]
    flips = [(grid[i], grid[i + 1]) for i in range(6) if vals[i] > 0 > vals[i + 1]]
    if not flips:
        print(f"  g={g}: NO flip in [{lo},{hi}]", flush=True)
        continue
    a, b = flips[0]
    w_c = brentq(imbalance, a, b, xtol=2e-4)
    print(f"  g={g}: flip at {w_c:.5f} ({time.time()-t0:.1f}s total)", flush=True)
    sol = lowest_eigenpairs(model.assemble(w_c), k=2)
    dec = two_mode_project(sol.ground)
    print(f"  at flip: gap {sol.eigenvalues[1]-sol.eigenvalues[0]:.5f} fid {dec.fidelity:.4f}", flush=True)
    print(f"  P_n {np.round(dec.p_values, 3)}", flush=True)
