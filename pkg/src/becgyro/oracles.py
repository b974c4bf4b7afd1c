"""Independent verification oracles for the production numerics.

Everything here re-derives a production quantity through a different
algorithm: matrix elements by Cartesian Gauss-Hermite quadrature instead
of polar Gauss-Laguerre (with Laguerre polynomials evaluated by their
recurrence rather than a library call), basis dimensions by dynamic
programming and literal enumeration instead of the pruned recursive
generator, and time evolution by dense matrix-exponential products
instead of adaptive Runge-Kutta.  Agreement between the two paths is
what the self-test and the test-suite certify.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.linalg

from .basis import Orbital, build_basis
from .states import ManyBodyState

__all__ = [
    "genlaguerre_recurrence",
    "orbital_value",
    "interaction_element_cartesian",
    "anisotropy_element_cartesian",
    "overlap_element_cartesian",
    "basis_block_counts_dp",
    "explicit_states",
    "lll_partition_dimension",
    "evolve_expm_slices",
    "selftest_report",
]


def genlaguerre_recurrence(n: int, alpha: float, x):
    """Generalized Laguerre polynomial by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x)
    prev = np.ones_like(x)
    curr = 1.0 + alpha - x
    for k in range(1, n):
        nxt = ((2 * k + 1 + alpha - x) * curr - (k + alpha) * prev) / (k + 1)
        prev, curr = curr, nxt
    return curr


def orbital_value(orbital: Orbital, x, y):
    """Oscillator orbital evaluated at Cartesian points (complex)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    am = abs(orbital.m)
    norm = math.sqrt(
        math.factorial(orbital.n)
        / (math.pi * math.factorial(orbital.n + am))
    )
    radial = norm * r2 ** (am / 2.0) * genlaguerre_recurrence(orbital.n, am, r2)
    radial = radial * np.exp(-r2 / 2.0)
    theta = np.arctan2(y, x)
    return radial * np.exp(1j * orbital.m * theta)


_HERMITE_CACHE = {}
_GRID_CACHE = {}


def _hermite_nodes(n_nodes: int):
    if n_nodes not in _HERMITE_CACHE:
        _HERMITE_CACHE[n_nodes] = np.polynomial.hermite.hermgauss(n_nodes)
    return _HERMITE_CACHE[n_nodes]


def _xy_grid(n_nodes: int, gaussian_count: int):
    """Hermite nodes rescaled so the weight matches exp(-c r^2) integrands."""
    nodes, _ = _hermite_nodes(n_nodes)
    c = math.sqrt(float(gaussian_count))
    return nodes[:, None] / c, nodes[None, :] / c


def _weight_grid(n_nodes: int, gaussian_count: int):
    """2D quadrature weights including the Gaussian the Hermite rule absorbs."""
    key = ("w", n_nodes, gaussian_count)
    if key not in _GRID_CACHE:
        nodes, weights = _hermite_nodes(n_nodes)
        c = float(gaussian_count)
        x, y = _xy_grid(n_nodes, gaussian_count)
        w2d = (weights[:, None] * weights[None, :]) / c
        _GRID_CACHE[key] = w2d * np.exp(c * (x * x + y * y))
    return _GRID_CACHE[key]


def _value_grid(orbital: Orbital, n_nodes: int, gaussian_count: int):
    key = (orbital.n, orbital.m, n_nodes, gaussian_count)
    if key not in _GRID_CACHE:
        x, y = _xy_grid(n_nodes, gaussian_count)
        _GRID_CACHE[key] = orbital_value(orbital, x, y)
    return _GRID_CACHE[key]


def interaction_element_cartesian(k1, k2, k3, k4, n_nodes: int = 48) -> complex:
    """Contact element by 2D Gauss-Hermite quadrature in Cartesian coordinates.

    The four-orbital product carries exp(-2 r^2); substituting
    x = u / sqrt(2), y = v / sqrt(2) exposes the Hermite weight
    exp(-u^2 - v^2) exactly, so the rule is exact for polynomial parts.
    """
    product = (
        np.conj(_value_grid(k1, n_nodes, 2))
        * np.conj(_value_grid(k2, n_nodes, 2))
        * _value_grid(k3, n_nodes, 2)
        * _value_grid(k4, n_nodes, 2)
    )
    return complex(np.sum(_weight_grid(n_nodes, 2) * product))


def anisotropy_element_cartesian(k, l, n_nodes: int = 48) -> complex:
    """One-body deformation element <k| 2(x^2 - y^2) |l> by Cartesian quadrature."""
    x, y = _xy_grid(n_nodes, 1)
    product = (
        np.conj(_value_grid(k, n_nodes, 1))
        * 2.0
        * (x * x - y * y)
        * _value_grid(l, n_nodes, 1)
    )
    return complex(np.sum(_weight_grid(n_nodes, 1) * product))


def overlap_element_cartesian(k, l, n_nodes: int = 48) -> complex:
    """Plain overlap <k|l> by Cartesian quadrature (orthonormality check)."""
    product = np.conj(_value_grid(k, n_nodes, 1)) * _value_grid(l, n_nodes, 1)
    return complex(np.sum(_weight_grid(n_nodes, 1) * product))


def basis_block_counts_dp(
    orbitals, n_particles: int, landau_budget: int, l_min: int, l_max: int
) -> dict:
    """State count per total L by dynamic programming over orbitals.

    Walks the orbital list once, tracking (particles used, total L,
    Landau quanta) multiplicities; independent of the recursive pruned
    enumeration used in production.
    """
    counts = {(0, 0, 0): 1}
    for orb in orbitals:
        quanta = orb.n + (abs(orb.m) - orb.m) // 2
        updated = {}
        for (used, l_total, q_total), mult in counts.items():
            occ = 0
            while used + occ <= n_particles:
                q_new = q_total + occ * quanta
                if q_new > landau_budget:
                    break
                key = (used + occ, l_total + occ * orb.m, q_new)
                updated[key] = updated.get(key, 0) + mult
                occ += 1
        counts = updated
    blocks = {}
    for (used, l_total, _q), mult in counts.items():
        if used == n_particles and l_min <= l_total <= l_max:
            blocks[l_total] = blocks.get(l_total, 0) + mult
    return blocks


def explicit_states(orbitals, n_particles: int, landau_budget: int,
                    l_min: int, l_max: int) -> set:
    """Literal multiset enumeration of Fock states (small N only).

    Returns occupation tuples in orbital-list order, for exact
    set-comparison against the production enumeration.
    """
    states = set()
    indices = range(len(orbitals))
    for combo in itertools.combinations_with_replacement(indices, n_particles):
        occ = [0] * len(orbitals)
        for idx in combo:
            occ[idx] += 1
        l_total = sum(orbitals[i].m * occ[i] for i in indices)
        quanta = sum(
            (orbitals[i].n + (abs(orbitals[i].m) - orbitals[i].m) // 2) * occ[i]
            for i in indices
        )
        if quanta <= landau_budget and l_min <= l_total <= l_max:
            states.add(tuple(occ))
    return states


_PARTITION_MEMO = {}


def lll_partition_dimension(n_particles: int, l_total: int, m_max: int) -> int:
    """Number of N-particle lowest-Landau states with total L.

    Counts partitions of L into at most N parts, each at most m_max
    (each part is one particle's m value; particles left at m = 0 are
    the unused slots).
    """

    def count(remaining, largest, slots):
        if remaining == 0:
            return 1
        if slots == 0 or largest == 0:
            return 0
        key = (remaining, largest, slots)
        hit = _PARTITION_MEMO.get(key)
        if hit is None:
            hit = sum(
                count(remaining - part, part, slots - 1)
                for part in range(min(largest, remaining), 0, -1)
            )
            _PARTITION_MEMO[key] = hit
        return hit

    return count(l_total, min(m_max, l_total), n_particles)


def evolve_expm_slices(
    model,
    basis,
    state: ManyBodyState,
    duration: float,
    omega_start: float,
    omega_end: float,
    scale_start: float = 1.0,
    scale_end: float = 1.0,
    n_slices: int = 2000,
) -> ManyBodyState:
    """Dense matrix-exponential propagation with midpoint-frozen parameters.

    Splits the run into n_slices constant-Hamiltonian slices evaluated at
    each slice's midpoint parameters; second-order accurate in the slice
    width and convergent to the exact evolution.  Small dimensions only.
    """
    dt = duration / n_slices
    amps = state.amplitudes.astype(np.complex128).copy()
    for j in range(n_slices):
        frac = (j + 0.5) / n_slices
        omega = omega_start + (omega_end - omega_start) * frac
        scale = scale_start + (scale_end - scale_start) * frac
        h = model.assemble(omega, anisotropy_scale=scale).matrix.toarray()
        amps = scipy.linalg.expm(-1j * dt * h) @ amps
    return ManyBodyState(basis=basis, amplitudes=amps)


def _oracle_orbitals():
    return [Orbital(n=n, m=m) for n in (0, 1) for m in (-1, 0, 1, 2, 3)]


def selftest_report(fast: bool = True) -> list:
    """Run the oracle comparisons; returns (name, passed, detail) triples."""
    from .basis import TruncationSpec, enumerate_fock_states, enumerate_orbitals
    from .dynamics import IntegratorConfig, RampSchedule, integrate_tdse
    from .hamiltonian import (
        HamiltonianModel,
        ModelParams,
        anisotropy_element,
        interaction_element,
    )
    from .spectrum import lowest_eigenpairs

    results = []
    orbs = _oracle_orbitals()

    worst = 0.0
    for k, l in itertools.product(orbs, repeat=2):
        target = 1.0 if (k.n, k.m) == (l.n, l.m) else 0.0
        worst = max(worst, abs(overlap_element_cartesian(k, l) - target))
    results.append(("orbital orthonormality vs 2d quadrature", worst < 1e-10,
                    f"worst deviation {worst:.2e}"))

    worst = 0.0
    for quad in itertools.product(orbs, repeat=4):
        oracle = interaction_element_cartesian(*quad)
        prod = interaction_element(*quad)
        worst = max(worst, abs(oracle - prod))
    results.append(("contact elements vs 2d quadrature", worst < 1e-8,
                    f"worst deviation {worst:.2e}"))

    worst = 0.0
    for k, l in itertools.product(orbs, repeat=2):
        oracle = anisotropy_element_cartesian(k, l)
        prod = anisotropy_element(k, l)
        worst = max(worst, abs(oracle - prod))
    results.append(("deformation elements vs 2d quadrature", worst < 1e-8,
                    f"worst deviation {worst:.2e}"))

    top_n = 4 if fast else 6
    ok = True
    detail = []
    for n_part in range(2, top_n + 1):
        spec = TruncationSpec(n_particles=n_part, l_max=n_part + 4)
        basis = build_basis(spec)
        oracle_counts = basis_block_counts_dp(
            basis.orbitals, n_part, spec.landau_budget, 0, spec.l_max
        )
        mine = {l: len(rng) for l, rng in basis.blocks.items()}
        expected = {
            l: c for l, c in oracle_counts.items() if l % 2 == 0 and c > 0
        }
        if mine != expected:
            ok = False
            detail.append(f"N={n_part} mismatch")
    results.append(("basis block dimensions vs counting oracle", ok,
                    "; ".join(detail) or f"N=2..{top_n} agree"))

    spec3 = TruncationSpec(n_particles=3, l_max=7, even_parity=False)
    orbs3 = enumerate_orbitals(spec3)
    produced = set(
        enumerate_fock_states(orbs3, 3, 0, spec3.l_max, spec3.landau_budget)
    )
    literal = explicit_states(orbs3, 3, spec3.landau_budget, 0, spec3.l_max)
    results.append(("state enumeration vs literal multisets", produced == literal,
                    f"{len(produced)} states"))

    spec_lll = TruncationSpec(n_particles=4, l_max=8, n_ll_max=1, even_parity=False)
    basis_lll = build_basis(spec_lll)
    ok = all(
        lll_partition_dimension(4, l_val, 8) == len(rng)
        for l_val, rng in basis_lll.blocks.items()
    )
    results.append(("lowest-Landau dimensions vs partition count", ok, ""))

    spec6 = TruncationSpec(n_particles=6, l_max=10)
    basis6 = build_basis(spec6)
    model6 = HamiltonianModel(
        ModelParams(g=1.0, anisotropy=0.03, spec=spec6), basis6
    )
    h6 = model6.assemble(0.85)
    dense_sol = lowest_eigenpairs(h6, k=2, dense_threshold=10**9)
    sparse_sol = lowest_eigenpairs(h6, k=2, dense_threshold=1)
    value_gap = float(np.max(np.abs(dense_sol.eigenvalues - sparse_sol.eigenvalues)))
    vec_align = min(
        abs(np.vdot(dense_sol.states[i].amplitudes, sparse_sol.states[i].amplitudes))
        for i in range(2)
    )
    results.append(("dense vs iterative eigensolver",
                    value_gap < 1e-8 and vec_align > 1.0 - 1e-8,
                    f"eigenvalue gap {value_gap:.2e}, alignment {vec_align:.10f}"))

    spec2 = TruncationSpec(n_particles=2, l_max=6)
    basis2 = build_basis(spec2)
    model2 = HamiltonianModel(
        ModelParams(g=3.0, anisotropy=0.03, spec=spec2), basis2
    )
    ground = lowest_eigenpairs(model2.assemble(0.3), k=1).ground
    schedule = RampSchedule.linear(0.3, 0.5, 0.01)
    tight = IntegratorConfig(rtol=1e-10, atol=1e-12)
    evolved = integrate_tdse(model2, basis2, ground, schedule, tight)
    reference = evolve_expm_slices(
        model2, basis2, ground, schedule.total_time, 0.3, 0.5,
        n_slices=2000 if fast else 8000,
    )
    mismatch = 1.0 - evolved.state.fidelity(reference.normalized())
    results.append(("ramp integration vs matrix-exponential oracle",
                    mismatch < 1e-6, f"fidelity defect {mismatch:.2e}"))

    spec4 = TruncationSpec(n_particles=4, l_max=8)
    basis4 = build_basis(spec4)
    model4 = HamiltonianModel(
        ModelParams(g=1.5, anisotropy=0.03, spec=spec4), basis4
    )
    pair = lowest_eigenpairs(model4.assemble(0.8), k=2)
    mixed = ManyBodyState(
        basis4,
        (pair.states[0].amplitudes + 0.7 * pair.states[1].amplitudes)
        / math.sqrt(1.49),
    )
    h4 = model4.assemble(0.8)
    e_start = float(np.vdot(mixed.amplitudes, h4.apply(mixed.amplitudes)).real)
    held = integrate_tdse(
        model4, basis4, mixed, RampSchedule.hold(0.8, 50.0), tight,
    )
    e_end = float(
        np.vdot(held.state.amplitudes, h4.apply(held.state.amplitudes)).real
    )
    energy_drift = abs(e_end - e_start) / max(1.0, abs(e_start))
    results.append((
        "norm and energy conservation on a hold",
        held.norm_drift <= 1e-6 and energy_drift < 1e-7,
        f"norm drift {held.norm_drift:.2e}, energy drift {energy_drift:.2e}",
    ))
    return results
