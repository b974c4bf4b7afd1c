"""Per-particle two-Landau-level basis: isotropic block grounds at N=12.

Orbital set identical to the packaged one (per-orbital landau index <= 2);
the state filter drops the total-quanta budget so any number of particles
may sit in the second level.
"""
import math
import sys
import time
from array import array

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from becgyro.basis import Orbital
from becgyro.hamiltonian import InteractionTensor

N = 12
L_MAX = 16

orbitals = []
for n in (0, 1):
    for m in range(-2, L_MAX + 1):
        if n + (abs(m) - m) // 2 <= 1 and m <= L_MAX:
            orbitals.append(Orbital(n=n, m=m))
orbitals.sort(key=lambda o: (o.n + (abs(o.m) - o.m) // 2, o.m, o.n))
print(f"{len(orbitals)} orbitals")
ms = np.array([o.m for o in orbitals])
e_orb = np.array([2 * o.n + abs(o.m) + 1 for o in orbitals], dtype=float)

t0 = time.time()
tensor = InteractionTensor(orbitals)
print(f"tensor: {len(tensor)} elements ({time.time()-t0:.1f}s)")

m_min = int(ms.min())
m_max = int(ms.max())


def enumerate_block(l_target):
    states = []
    occ = np.zeros(len(orbitals), dtype=np.int16)

    def rec(i, n_left, l_left):
        if n_left == 0:
            if l_left == 0:
                states.append(occ.copy())
            return
        if i == len(orbitals):
            return
        if l_left < n_left * m_min or l_left > n_left * m_max:
            return
        m = ms[i]
        for k in range(n_left, -1, -1):
            occ[i] = k
            rec(i + 1, n_left - k, l_left - k * m)
        occ[i] = 0

    rec(0, N, l_target)
    return np.array(states)


def block_v_op(states):
    dim = len(states)
    index = {tuple(row): i for i, row in enumerate(states)}
    pairs_by_m = {}
    rows = array("l")
    cols = array("l")
    vals = array("d")
    for s_idx in range(dim):
        occ = states[s_idx]
        occupied = np.nonzero(occ)[0]
        for ai in range(len(occupied)):
            i = occupied[ai]
            for aj in range(ai, len(occupied)):
                j = occupied[aj]
                if i == j and occ[i] < 2:
                    continue
                mult_ann = 1.0 if i == j else 2.0
                if i == j:
                    f_ann = math.sqrt(occ[i] * (occ[i] - 1))
                else:
                    f_ann = math.sqrt(occ[i] * occ[j])
                mid = occ.copy()
                mid[i] -= 1
                mid[j] -= 1
                m_total = int(ms[i] + ms[j])
                if m_total not in pairs_by_m:
                    pairs_by_m[m_total] = tensor.pairs_with_m(m_total)
                for a, b in pairs_by_m[m_total]:
                    mult_cre = 1.0 if a == b else 2.0
                    if a == b:
                        f_cre = math.sqrt((mid[a] + 1) * (mid[a] + 2))
                    else:
                        f_cre = math.sqrt((mid[a] + 1) * (mid[b] + 1))
                    tgt = mid.copy()
                    tgt[a] += 1
                    tgt[b] += 1
                    t_idx = index.get(tuple(tgt))
                    if t_idx is None or t_idx > s_idx:
                        continue
                    value = (
                        0.5 * mult_ann * mult_cre * f_ann * f_cre
                        * tensor.element(a, b, i, j)
                    )
                    if value != 0.0:
                        rows.append(t_idx)
                        cols.append(s_idx)
                        vals.append(value)
        if s_idx % 20000 == 19999:
            print(f"    assembled {s_idx+1}/{dim}", flush=True)
    v = sp.coo_matrix(
        (np.frombuffer(vals, dtype=np.float64),
         (np.frombuffer(rows, dtype=np.int64), np.frombuffer(cols, dtype=np.int64))),
        shape=(dim, dim),
    ).tocsr()
    return v + sp.triu(v, k=1).T


l_list = [int(x) for x in sys.argv[1:]] or list(range(0, 13, 2))
results = {}
for L in l_list:
    t0 = time.time()
    states = enumerate_block(L)
    diag = states @ e_orb
    t1 = time.time()
    v = block_v_op(states)
    t2 = time.time()
    es = {}
    for g in (0.5, 0.22):
        h = sp.diags(diag) + g * v
        if h.shape[0] < 800:
            import scipy.linalg as sla

            vals2 = sla.eigh(h.toarray(), eigvals_only=True,
                             subset_by_index=[0, min(2, h.shape[0] - 1)])
        else:
            vals2 = spla.eigsh(h, k=3, which="SA",
                               return_eigenvectors=False)[::-1]
        es[g] = vals2
    results[L] = es
    print(f"L={L} dim {len(states)} enum {t1-t0:.1f}s asm {t2-t1:.1f}s "
          f"g=0.5: {es[0.5][0]:.6f} (+{es[0.5][1]-es[0.5][0]:.4f}) "
          f"g=0.22: {es[0.22][0]:.6f} (+{es[0.22][1]-es[0.22][0]:.4f})",
          flush=True)

for g in (0.5, 0.22):
    print(f"--- fan, g={g} (crossing of L with L=0) ---")
    e0 = results[0][g][0] if 0 in results else None
    for L in sorted(results):
        if L == 0 or e0 is None:
            continue
        print(f"  L={L:2d}: omega = {(results[L][g][0]-e0)/L:.5f}")
