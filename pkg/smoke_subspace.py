import numpy as np

from becgyro import (
    ManyBodyState,
    ModelParams,
    TruncationSpec,
    build_basis,
    HamiltonianModel,
    lowest_eigenpairs,
    parity_imbalance,
)

spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=2)
basis = build_basis(spec)


def imbalance_full(model, omega, dense):
    h = model.assemble(omega)
    if dense:
        import scipy.linalg as sla

        vals, vecs = sla.eigh(h.matrix.toarray(), subset_by_index=[0, 1])
        state = ManyBodyState(basis=basis, amplitudes=vecs[:, 0])
        return parity_imbalance(state), vals[1] - vals[0]
    sol = lowest_eigenpairs(h, k=2)
    return parity_imbalance(sol.ground), sol.gap


def imbalance_restricted(model, eig, omega, q):
    # anisotropy confined to the lowest q isotropic eigenstates per L block
    sel = []
    offsets = {}
    for L in sorted(basis.blocks):
        rng = basis.blocks[L]
        take = min(q, rng.stop - rng.start)
        offsets[L] = (len(sel), take)
        sel.extend(range(rng.start, rng.start + take))
    sel = np.array(sel)
    n = len(sel)
    h_eff = np.zeros((n, n))
    np.fill_diagonal(h_eff, eig.energies[sel] - omega * eig.l_values[sel])
    a = model.params.anisotropy
    ls = sorted(basis.blocks)
    for la, lb in zip(ls, ls[1:]):
        if lb - la != 2:
            continue
        w = eig.w_blocks[(la, lb)]
        oa, ta = offsets[la]
        ob, tb = offsets[lb]
        h_eff[oa:oa + ta, ob:ob + tb] = a * w[:ta, :tb]
        h_eff[ob:ob + tb, oa:oa + ta] = a * w[:ta, :tb].T
    vals, vecs = np.linalg.eigh(h_eff)
    amps = np.zeros(basis.dimension)
    full_cols = np.zeros((basis.dimension, n))
    # map restricted eigvec back to Fock space via block eigenvectors
    col = vecs[:, 0]
    for L in ls:
        rng = basis.blocks[L]
        oa, ta = offsets[L]
        u = eig.u_blocks[L][:, :ta]
        amps[rng.start:rng.stop] = u @ col[oa:oa + ta]
    state = ManyBodyState(basis=basis, amplitudes=amps)
    return parity_imbalance(state), vals[1] - vals[0]


for gn6 in (1.0, 0.44):
    g = 6.0 * gn6 / 12.0
    model = HamiltonianModel(ModelParams(g=g, anisotropy=0.03, spec=spec), basis)
    eig = model.isotropic_eigenbasis()
    print(f"--- gN/6={gn6} ---")
    for omega in (0.80, 0.823, 0.8464, 0.90, 0.938, 0.96):
        s_it, gap_it = imbalance_full(model, omega, dense=False)
        line = f"omega={omega:.4f} full(eigsh): imb {s_it:+.4f} gap {gap_it:.5f}"
        for q in (1, 2, 4):
            s_r, gap_r = imbalance_restricted(model, eig, omega, q)
            line += f" | q={q}: {s_r:+.4f}/{gap_r:.4f}"
        print(line)
