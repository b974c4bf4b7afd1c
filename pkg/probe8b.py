import numpy as np

from becgyro import (
    HamiltonianModel,
    ModelParams,
    TruncationSpec,
    build_basis,
    find_critical_frequency,
)
from becgyro.errors import BracketError

def probe(n, x, bracket=(0.60, 0.999)):
    spec = TruncationSpec(n_particles=n, l_max=n + 4)
    basis = build_basis(spec)
    model = HamiltonianModel(ModelParams(g=6.0 * x / n, anisotropy=0.03, spec=spec),
                             basis, cache_dir="cache")
    for treatment in ("perturbative", "exact"):
        try:
            c = find_critical_frequency(model, basis, bracket=bracket,
                                        treatment=treatment)
            print(f"  N={n} gN/6={x:.2f} {treatment:13s} om_c {c.omega_c:.5f} "
                  f"gap_at_crit {c.gap_at_critical:.6f} min_gap {c.min_gap:.6f} "
                  f"at {c.omega_min_gap:.5f}")
        except BracketError as exc:
            msg = str(exc).split(";")[0]
            print(f"  N={n} gN/6={x:.2f} {treatment:13s} BracketError: {msg}")

print("g-sweep at N=6:")
for x in (0.3, 0.5, 0.75, 1.0):
    probe(6, x)
print("N-sweep at gN/6=1.0:")
for n in (4, 8, 10):
    probe(n, 1.0)
print("N-sweep at gN/6=0.6:")
for n in (6, 8):
    probe(n, 0.6)
