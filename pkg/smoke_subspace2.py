import numpy as np

from becgyro import (
    ManyBodyState,
    ModelParams,
    TruncationSpec,
    build_basis,
    HamiltonianModel,
    parity_imbalance,
)

spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=2)
basis = build_basis(spec)


def make_imbalance(model, eig, q):
    sel = []
    offsets = {}
    ls = sorted(basis.blocks)
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

    def imbalance(omega):
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
        return parity_imbalance(ManyBodyState(basis=basis, amplitudes=amps))

    return imbalance


for gn6, lo, hi, target in ((1.0, 0.80, 0.87, 0.823), (0.44, 0.88, 0.97, 0.938)):
    g = 6.0 * gn6 / 12.0
    model = HamiltonianModel(ModelParams(g=g, anisotropy=0.03, spec=spec), basis)
    eig = model.isotropic_eigenbasis()
    for q in (1, 2, 3):
        f = make_imbalance(model, eig, q)
        a, b = lo, hi
        sa = f(a)
        for _ in range(60):
            if b - a < 1e-5:
                break
            m = 0.5 * (a + b)
            sm = f(m)
            if (sm >= 0) == (sa >= 0):
                a, sa = m, sm
            else:
                b = m
        flip = 0.5 * (a + b)
        print(f"gN/6={gn6} q={q}: flip at {flip:.5f} (target {target}, err {flip-target:+.4f})")
