import numpy as np

from becgyro import (
    ModelParams,
    TruncationSpec,
    build_basis,
    HamiltonianModel,
    lowest_eigenpairs,
)

N = 12
g = 0.5

# LLL-only: interaction energies along the yrast line vs closed form
spec1 = TruncationSpec(n_particles=N, l_max=16, n_ll_max=1)
basis1 = build_basis(spec1)
model1 = HamiltonianModel(ModelParams(g=g, anisotropy=0.0, spec=spec1), basis1)
print(f"LLL basis dim {basis1.dimension}, blocks {sorted(basis1.blocks)}")
print("L   E_int(num)   E_int(closed)   diff")
for L in range(0, 17, 2):
    blk = basis1.blocks[L]
    idx = list(blk.index_range) if hasattr(blk, "index_range") else None
    sol = lowest_eigenpairs(model1.assemble(0.0), k=1)
    break

# simpler: assemble isotropic H once, extract block-wise ground energies
h = model1.assemble(0.0).matrix.toarray()
l_values = model1.l_values
print("block-wise grounds, LLL:")
for L in range(0, 17, 2):
    sel = np.where(l_values == L)[0]
    if len(sel) == 0:
        continue
    sub = h[np.ix_(sel, sel)]
    e0 = np.linalg.eigvalsh(sub)[0]
    e_int = e0 - (N + L)
    closed = (g * N / (8 * np.pi)) * (2 * N - L - 2) if L >= 2 else g * N * (N - 1) / (4 * np.pi)
    print(f"{L:3d}  {e_int:12.8f}  {closed:12.8f}  {e_int-closed:+.2e}")

# two-LL budget basis: block grounds and sector crossings
spec2 = TruncationSpec(n_particles=N, l_max=16, n_ll_max=2)
basis2 = build_basis(spec2)
model2 = HamiltonianModel(ModelParams(g=g, anisotropy=0.0, spec=spec2), basis2)
h2 = model2.assemble(0.0).matrix.toarray()
l2 = model2.l_values
print(f"\ntwo-LL budget basis dim {basis2.dimension}")
print("L   E_L(iso)")
e_block = {}
for L in range(0, 17, 2):
    sel = np.where(l2 == L)[0]
    sub = h2[np.ix_(sel, sel)]
    e_block[L] = np.linalg.eigvalsh(sub)[0]
    print(f"{L:3d}  {e_block[L]:.8f}")
print("pairwise crossings with L=0:")
for L in range(2, 17, 2):
    print(f"  L={L}: omega = {(e_block[L]-e_block[0])/L:.5f}")
