"""First-order anisotropic mixing within the yrast manifold L <= N."""
import numpy as np
from scipy.optimize import brentq

from becgyro import (TruncationSpec, ModelParams, HamiltonianModel, ManyBodyState,
                     build_basis, parity_imbalance, two_mode_project)

N, A = 12, 0.03
spec = TruncationSpec(n_particles=N, l_max=N + 4, n_ll_max=2, even_parity=True)
basis = build_basis(spec)
ls_all = sorted(basis.blocks)

def run(g, lo, hi, l_top):
    model = HamiltonianModel(params=ModelParams(g=g, anisotropy=A, spec=spec), basis=basis)
    eig = model.isotropic_eigenbasis()
    ls = [L for L in ls_all if L <= l_top]
    base = np.zeros((len(ls), len(ls)))
    for i, (la, lb) in enumerate(zip(ls, ls[1:])):
        w = eig.w_blocks[(la, lb)]
        base[i, i + 1] = A * w[0, 0]
        base[i + 1, i] = A * w[0, 0]
    sel = np.array([basis.blocks[L].start for L in ls])
    de = eig.energies[sel]
    dl = eig.l_values[sel]

    def ground(omega):
        h = base.copy()
        np.fill_diagonal(h, de - omega * dl)
        vals, vecs = np.linalg.eigh(h)
        amps = np.zeros(basis.dimension)
        for i, L in enumerate(ls):
            rng = basis.blocks[L]
            amps[rng.start:rng.stop] = eig.u_blocks[L][:, 0] * vecs[i, 0]
        return ManyBodyState(basis=basis, amplitudes=amps), vals

    def imb(omega):
        st, _ = ground(omega)
        return parity_imbalance(st)

    try:
        w_c = brentq(imb, lo, hi, xtol=1e-6)
    except ValueError:
        print(f"g={g} l_top={l_top}: no flip in [{lo},{hi}] (imb {imb(lo):+.3f}..{imb(hi):+.3f})")
        return
    st, vals = ground(w_c)
    dec = two_mode_project(st)
    wt = np.round(np.linalg.eigh(np.diag(de - w_c * dl) + base)[1][:, 0] ** 2, 3)
    print(f"g={g} l_top={l_top}: flip {w_c:.5f} gap {vals[1]-vals[0]:.5f} fid {dec.fidelity:.4f}")
    print(f"   yrast weights {wt}")
    print(f"   P_n {np.round(dec.p_values, 3)}")

for g, lo, hi in ((0.5, 0.78, 0.88), (0.22, 0.88, 0.99)):
    for l_top in (N, N + 4):
        run(g, lo, hi, l_top)
