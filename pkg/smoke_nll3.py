import time
from becgyro import TruncationSpec, build_basis

t0 = time.time()
spec = TruncationSpec(n_particles=12, l_max=16, n_ll_max=3, even_parity=True)
basis = build_basis(spec)
blocks = {L: r.stop - r.start for L, r in sorted(basis.blocks.items())}
print(f"n_ll=3: dim {basis.dimension} ({time.time()-t0:.1f}s)", flush=True)
print("blocks", blocks, flush=True)
