"""Yrast-manifold mixing evaluated in the richer truncation."""
import time

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh

from becgyro import (TruncationSpec, ModelParams, HamiltonianModel, ManyBodyState,
                     build_basis, parity_imbalance, two_mode_project)

N, A = 12, 0.03
spec = TruncationSpec(n_particles=N, l_max=N + 4, n_ll_max=3, even_parity=True)
basis = build_basis(spec)
ls = [L for L in sorted(basis.blocks) if L <= N]
print("dim", basis.dimension, flush=True)

for g, lo, hi in ((0.5, 0.78, 0.88), (0.22, 0.88, 0.99)):
    t0 = time.time()
    model = HamiltonianModel(params=ModelParams(g=g, anisotropy=A, spec=spec), basis=basis)
    h_iso = model.assemble(0.0, anisotropy_scale=0.0).matrix
    q = model.q_op
    yr_vec, yr_e = {}, {}
    for L in sorted(basis.blocks):
        rng = basis.blocks[L]
        sub = h_iso[rng.start:rng.stop, rng.start:rng.stop]
        if sub.shape[0] < 500:
            vals, vecs = np.linalg.eigh(sub.toarray())
            yr_e[L], v = vals[0], vecs[:, 0]
        else:
            vals, vecs = eigsh(sub, k=1, which="SA", tol=1e-10)
            yr_e[L], v = vals[0], vecs[:, 0]
        yr_vec[L] = v
    w_el = {}
    for la, lb in zip(ls, ls[1:]):
        ra, rb = basis.blocks[la], basis.blocks[lb]
        full_a = np.zeros(basis.dimension); full_a[ra.start:ra.stop] = yr_vec[la]
        full_b = np.zeros(basis.dimension); full_b[rb.start:rb.stop] = yr_vec[lb]
        w_el[(la, lb)] = float(full_a @ (q @ full_b))
    print(f"g={g}: blocks+W in {time.time()-t0:.1f}s", flush=True)

    n_man = len(ls)
    base = np.zeros((n_man, n_man))
    for i, (la, lb) in enumerate(zip(ls, ls[1:])):
        base[i, i + 1] = base[i + 1, i] = A * w_el[(la, lb)]
    de = np.array([yr_e[L] for L in ls])
    dl = np.array([float(L) for L in ls])

    def ground(omega):
        h = base.copy()
        np.fill_diagonal(h, de - omega * dl)
        vals, vecs = np.linalg.eigh(h)
        amps = np.zeros(basis.dimension)
        for i, L in enumerate(ls):
            rng = basis.blocks[L]
            amps[rng.start:rng.stop] = yr_vec[L] * vecs[i, 0]
        return ManyBodyState(basis=basis, amplitudes=amps), vals

    def imb(omega):
        st, _ = ground(omega)
        return parity_imbalance(st)

    try:
        w_c = brentq(imb, lo, hi, xtol=1e-6)
    except ValueError:
        print(f"  no flip ({imb(lo):+.3f}..{imb(hi):+.3f})", flush=True)
        continue
    st, vals = ground(w_c)
    dec = two_mode_project(st)
    print(f"  flip {w_c:.5f} gap {vals[1]-vals[0]:.5f} fid {dec.fidelity:.4f}", flush=True)
    print(f"  P_n {np.round(dec.p_values, 3)}", flush=True)
