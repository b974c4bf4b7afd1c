"""Two-mode content of the prepared state under both anisotropy treatments."""
import time

import numpy as np
from scipy.optimize import brentq

from becgyro import (
    TruncationSpec,
    ModelParams,
    HamiltonianModel,
    ManyBodyState,
    build_basis,
    lowest_eigenpairs,
    parity_imbalance,
    two_mode_project,
)

N = 12
A = 0.03


def restricted_flip(model, basis, eig, q, lo, hi):
    sel, offsets, ls = [], {}, sorted(basis.blocks)
    for L in ls:
        rng = basis.blocks[L]
        take = min(q, rng.stop - rng.start)
        offsets[L] = (len(sel), take)
        sel.extend(range(rng.start, rng.start + take))
    sel = np.array(sel)
    n = len(sel)
    base = np.zeros((n, n))
    a = model.params.anisotropy
    for la, lb in zip(ls, ls[1:]):
        if lb - la != 2:
            continue
        w = eig.w_blocks[(la, lb)]
        oa, ta = offsets[la]
        ob, tb = offsets[lb]
        base[oa:oa + ta, ob:ob + tb] = a * w[:ta, :tb]
        base[ob:ob + tb, oa:oa + ta] = a * w[:ta, :tb].T
    diag_e = eig.energies[sel]
    diag_l = eig.l_values[sel]

    def ground(omega):
        h_eff = base.copy()
        np.fill_diagonal(h_eff, diag_e - omega * diag_l)
        vals, vecs = np.linalg.eigh(h_eff)
        amps = np.zeros(basis.dimension)
        col = vecs[:, 0]
        for L in ls:
            rng = basis.blocks[L]
            oa, ta = offsets[L]
            u = eig.u_blocks[L][:, :ta]
            amps[rng.start:rng.stop] = u @ col[oa:oa + ta]
        return ManyBodyState(basis=basis, amplitudes=amps), vals

    def imb(omega):
        st, _ = ground(omega)
        return parity_imbalance(st)

    w_c = brentq(imb, lo, hi, xtol=1e-6)
    st, vals = ground(w_c)
    return w_c, st, vals[1] - vals[0]


def report(tag, state):
    dec = two_mode_project(state)
    pv = np.array2string(dec.p_values, precision=3, suppress_small=True)
    print(f"  {tag}: fid={dec.fidelity:.4f} odd={dec.odd_weight:.2e}")
    print(f"    P_n = {pv}")


spec = TruncationSpec(n_particles=N, l_max=N + 4, n_ll_max=2, even_parity=True)
basis = build_basis(spec)
print("dim", basis.dimension)

for g6, lo, hi in ((1.0, 0.80, 0.86), (0.44, 0.88, 0.96)):
    g = 6.0 * g6 / N
    params = ModelParams(g=g, anisotropy=A, spec=spec)
    model = HamiltonianModel(params=params, basis=basis)
    eig = model.isotropic_eigenbasis()
    t0 = time.time()
    w_c, st, gap = restricted_flip(model, basis, eig, 1, lo, hi)
    print(f"gN/6={g6}: restricted q=1 flip at {w_c:.5f} gap {gap:.5f} ({time.time()-t0:.1f}s)")
    report("restricted ground", st)

# full-H ground at its own flip, cat coupling only (bat never flips)
params = ModelParams(g=0.5, anisotropy=A, spec=spec)
model = HamiltonianModel(params=params, basis=basis)
for omega in (0.84638,):
    sol = lowest_eigenpairs(model.assemble(omega), k=2)
    print(f"full H at {omega}: gap {sol.eigenvalues[1]-sol.eigenvalues[0]:.5f} "
          f"imb {parity_imbalance(sol.ground):+.4f}")
    report("full ground", sol.ground)
