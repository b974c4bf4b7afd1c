"""Second-order effective Hamiltonian over the yrast manifold L <= N."""
import numpy as np
from scipy.optimize import brentq

from becgyro import (TruncationSpec, ModelParams, HamiltonianModel, ManyBodyState,
                     build_basis, parity_imbalance, two_mode_project)

N, A = 12, 0.03
spec = TruncationSpec(n_particles=N, l_max=N + 4, n_ll_max=2, even_parity=True)
basis = build_basis(spec)
ls_all = sorted(basis.blocks)
ls = [L for L in ls_all if L <= N]
n_man = len(ls)

def build(g):
    model = HamiltonianModel(params=ModelParams(g=g, anisotropy=A, spec=spec), basis=basis)
    eig = model.isotropic_eigenbasis()
    return model, eig

def w_block(eig, la, lb):
    """Full W between blocks (la -> lb), either order."""
    if (la, lb) in eig.w_blocks:
        return eig.w_blocks[(la, lb)]
    return eig.w_blocks[(lb, la)].T

def h_eff(eig, omega, second_order=True):
    h = np.zeros((n_man, n_man))
    e = {L: eig.energies[basis.blocks[L].start:basis.blocks[L].stop] - omega * L
         for L in ls_all}
    for i, L in enumerate(ls):
        h[i, i] = e[L][0]
    for i, (la, lb) in enumerate(zip(ls, ls[1:])):
        w = w_block(eig, la, lb)
        h[i, i + 1] += A * w[0, 0]
        h[i + 1, i] += A * w[0, 0]
    if not second_order:
        return h
    # second order: virtual excursions to every non-manifold eigenstate
    for i, li in enumerate(ls):
        for j, lj in enumerate(ls):
            if abs(li - lj) not in (0, 4):
                continue
            tot = 0.0
            for lm in ls_all:
                if abs(lm - li) != 2 or abs(lm - lj) != 2:
                    continue
                wi = w_block(eig, li, lm)[0, :]   # <yr_i|Q|m_k>
                wj = w_block(eig, lj, lm)[0, :]
                keep = np.ones(len(wi), bool)
                if lm in ls:
                    keep[0] = False               # yrast of an in-manifold block
                den_i = e[li][0] - e[lm]
                den_j = e[lj][0] - e[lm]
                tot += np.sum(wi[keep] * wj[keep] * 0.5 *
                              (1.0 / den_i[keep] + 1.0 / den_j[keep]))
            h[i, j] += A * A * tot
    return h

def ground_state(eig, omega, second_order=True):
    vals, vecs = np.linalg.eigh(h_eff(eig, omega, second_order))
    amps = np.zeros(basis.dimension)
    for i, L in enumerate(ls):
        rng = basis.blocks[L]
        amps[rng.start:rng.stop] = eig.u_blocks[L][:, 0] * vecs[i, 0]
    return ManyBodyState(basis=basis, amplitudes=amps), vals, vecs[:, 0]

for g, lo, hi in ((0.5, 0.78, 0.88), (0.22, 0.88, 0.99)):
    model, eig = build(g)
    for so in (False, True):
        def imb(omega):
            st, _, _ = ground_state(eig, omega, so)
            return parity_imbalance(st)
        try:
            w_c = brentq(imb, lo, hi, xtol=1e-6)
        except ValueError:
            print(f"g={g} 2nd={so}: no flip ({imb(lo):+.3f}..{imb(hi):+.3f})")
            continue
        st, vals, col = ground_state(eig, w_c, so)
        dec = two_mode_project(st)
        print(f"g={g} 2nd={so}: flip {w_c:.5f} gap {vals[1]-vals[0]:.5f} fid {dec.fidelity:.4f}")
        print(f"   weights {np.round(col**2, 3)}")
        print(f"   P_n {np.round(dec.p_values, 3)}")
