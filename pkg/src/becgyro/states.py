"""Many-body state analysis: one-body density matrix, mode structure, L moments.

The entangled states this package targets are superpositions of two
macroscopically distinct single-particle modes.  The tools here extract
that structure from an exact eigenvector: the single-particle density
matrix and its natural orbitals, the projection of the state onto the
two-mode family |N - 2n, 2n>, the entropy of that mode distribution, and
the angular-momentum moments that control interferometric sensitivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import ManyBodyBasis, enumerate_fock_states

__all__ = [
    "ManyBodyState",
    "NaturalOrbitals",
    "TwoModeDecomposition",
    "spdm",
    "two_mode_project",
    "mode_entropy",
    "angular_momentum_moments",
    "l_distribution",
]


@dataclass
class ManyBodyState:
    """Amplitude vector over a ManyBodyBasis (complex, basis ordering)."""

    basis: ManyBodyBasis
    amplitudes: np.ndarray = field(repr=False)

    @staticmethod
    def from_vector(basis: ManyBodyBasis, vector) -> "ManyBodyState":
        vec = np.asarray(vector, dtype=np.complex128)
        if vec.shape != (basis.dimension,):
            raise ValueError(
                f"vector shape {vec.shape} does not match basis dimension {basis.dimension}"
            )
        return ManyBodyState(basis=basis, amplitudes=vec)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "ManyBodyState":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return ManyBodyState(self.basis, self.amplitudes / n)

    def overlap(self, other: "ManyBodyState") -> complex:
        """<self|other> assuming both live on the same basis."""
        if other.basis is not self.basis and other.basis.spec != self.basis.spec:
            raise ValueError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "ManyBodyState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True)
class NaturalOrbitals:
    """Eigenpairs of the single-particle density matrix, populations descending."""

    populations: np.ndarray  # (K,) real, sums to N
    vectors: np.ndarray = field(repr=False)  # (K, K), column i = i-th orbital
    orbitals: tuple = field(repr=False)

    def weight_on_m(self, column: int, m_values) -> float:
        """Total |component|^2 of natural orbital `column` on bare orbitals with m in m_values."""
        wanted = set(m_values)
        sel = [k for k, orb in enumerate(self.orbitals) if orb.m in wanted]
        return float(np.sum(np.abs(self.vectors[sel, column]) ** 2))

    def odd_m_weight(self, column: int) -> float:
        sel = [k for k, orb in enumerate(self.orbitals) if orb.m % 2 != 0]
        return float(np.sum(np.abs(self.vectors[sel, column]) ** 2))


def _hop_table(basis: ManyBodyBasis):
    """Cached table of one-particle hops within the basis.

    Rows (t, s, k, l, factor) with factor = sqrt(N_l (N_k + 1)) encode
    <t| a+_k a_l |s> for k != l; used to vectorize density-matrix builds.
    """
    cached = getattr(basis, "_hop_table_cache", None)
    if cached is not None:
        return cached
    n_orb = basis.n_orbitals
    ms = [orb.m for orb in basis.orbitals]
    parity = basis.spec.even_parity
    candidates = {
        l: [
            k
            for k in range(n_orb)
            if k != l and (not parity or (ms[k] - ms[l]) % 2 == 0)
        ]
        for l in range(n_orb)
    }
    t_rows, s_rows, bins, factors = [], [], [], []
    for s_idx in range(basis.dimension):
        occ = basis.occupations[s_idx]
        for l in np.nonzero(occ)[0]:
            for k in candidates[l]:
                tgt = occ.copy()
                tgt[l] -= 1
                tgt[k] += 1
                t_idx = basis.index.get(tuple(tgt))
                if t_idx is None:
                    continue
                t_rows.append(t_idx)
                s_rows.append(s_idx)
                bins.append(l * n_orb + k)
                factors.append(math.sqrt(occ[l] * (occ[k] + 1)))
    table = (
        np.array(t_rows, dtype=np.int64),
        np.array(s_rows, dtype=np.int64),
        np.array(bins, dtype=np.int64),
        np.array(factors),
    )
    object.__setattr__(basis, "_hop_table_cache", table)
    return table


def spdm(state: ManyBodyState) -> NaturalOrbitals:
    """Single-particle density matrix rho[l, k] = <a+_k a_l>, diagonalized.

    Requires a normalized state.  The trace equals the particle number to
    1e-8 by construction; a violation indicates a corrupted state and is
    raised as an error.  Natural orbitals come back sorted by descending
    population with a deterministic sign (largest component positive).
    """
    if abs(state.norm - 1.0) > 1e-8:
        raise ValueError("density matrix requires a normalized state")
    basis = state.basis
    n_orb = basis.n_orbitals
    amps = state.amplitudes
    rho = np.zeros((n_orb, n_orb), dtype=np.complex128)
    # diagonal: occupation expectation values
    rho[np.diag_indices(n_orb)] = basis.occupations.T @ (np.abs(amps) ** 2)
    t_rows, s_rows, bins, factors = _hop_table(basis)
    if len(t_rows):
        contrib = np.conj(amps[t_rows]) * amps[s_rows] * factors
        np.add.at(rho.reshape(-1), bins, contrib)
    rho = 0.5 * (rho + rho.conj().T)
    trace = float(np.real(np.trace(rho)))
    if abs(trace - basis.spec.n_particles) > 1e-8:
        raise RuntimeError(
            f"density-matrix trace {trace} deviates from particle number"
        )
    evals, evecs = np.linalg.eigh(rho)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    for col in range(evecs.shape[1]):
        lead = np.argmax(np.abs(evecs[:, col]))
        phase = evecs[lead, col]
        if abs(phase) > 0:
            evecs[:, col] *= np.conj(phase) / abs(phase)
    return NaturalOrbitals(
        populations=np.real(evals), vectors=evecs, orbitals=basis.orbitals
    )


@dataclass(frozen=True)
class TwoModeDecomposition:
    """Projection of a state onto |N - 2n> |2n> over two orthonormal modes."""

    coefficients: np.ndarray  # C_n, n = 0 .. N//2
    p_values: np.ndarray  # |C_n|^2
    fidelity: float  # sum of p_values
    odd_weight: float  # weight found at odd occupation of the second mode
    mode_one: np.ndarray = field(repr=False)
    mode_two: np.ndarray = field(repr=False)


class _Sector:
    """Fock states of a fixed particle number used by mode projections."""

    def __init__(self, orbitals, n_particles, l_min, l_max, landau_budget):
        states = sorted(
            enumerate_fock_states(
                orbitals, n_particles, l_min, l_max, landau_budget, even_parity=False
            )
        )
        self.occupations = (
            np.array(states, dtype=np.int64)
            if states
            else np.zeros((0, len(orbitals)), dtype=np.int64)
        )
        self.index = {occ: i for i, occ in enumerate(states)}
        self.dimension = len(states)


def _sector_chain(basis: ManyBodyBasis):
    """Sectors for particle numbers N, N-1, ..., 0, cached on the basis.

    Annihilating particles can push intermediate states slightly outside
    the N-particle window: removing an m = -1 particle raises L by one,
    and budget quanta allow L down to -budget, so the sector bounds are
    widened by the Landau budget on both sides.
    """
    cached = getattr(basis, "_sector_chain_cache", None)
    if cached is not None:
        return cached
    spec = basis.spec
    budget = spec.landau_budget
    chain = [
        _Sector(
            basis.orbitals,
            n,
            l_min=-budget,
            l_max=spec.l_max + budget,
            landau_budget=budget,
        )
        for n in range(spec.n_particles, -1, -1)
    ]
    object.__setattr__(basis, "_sector_chain_cache", chain)
    return chain


def _apply_mode_annihilation(vec, mode_conj, sector_from, sector_to, orbital_count):
    """Apply b = sum_k conj(u_k) a_k, mapping sector n to sector n-1."""
    out = np.zeros(sector_to.dimension, dtype=np.complex128)
    occs = sector_from.occupations
    for s_idx in range(sector_from.dimension):
        c = vec[s_idx]
        if c == 0:
            continue
        occ = occs[s_idx]
        for k in np.nonzero(occ)[0]:
            u = mode_conj[k]
            if u == 0:
                continue
            tgt = occ.copy()
            tgt[k] -= 1
            t_idx = sector_to.index.get(tuple(tgt))
            if t_idx is None:
                continue
            out[t_idx] += u * math.sqrt(occ[k]) * c
    return out


def two_mode_project(state: ManyBodyState, modes=None) -> TwoModeDecomposition:
    """Expand `state` over the two-mode family built from the leading modes.

    `modes` is either a NaturalOrbitals object (its two most populated
    orbitals are used, the one with more weight on bare m = 0 taken as
    mode one), an explicit pair of orthonormal coefficient vectors, or
    None to diagonalize the state's own density matrix first.
    Returns the coefficients C_n = <N-2n, 2n|state>, their squares, the
    captured fidelity, and the weight found at odd occupations of mode
    two, which vanishes for symmetry reasons and is kept as a diagnostic.
    """
    basis = state.basis
    n_part = basis.spec.n_particles
    if n_part % 2:
        raise ValueError("two-mode decomposition is defined for even particle number")
    if abs(state.norm - 1.0) > 1e-8:
        raise ValueError("two-mode projection requires a normalized state")

    if modes is None:
        modes = spdm(state)
    if isinstance(modes, NaturalOrbitals):
        u1 = modes.vectors[:, 0].copy()
        u2 = modes.vectors[:, 1].copy()
        zero_m = [k for k, orb in enumerate(modes.orbitals) if orb.m == 0]
        w1 = float(np.sum(np.abs(u1[zero_m]) ** 2))
        w2 = float(np.sum(np.abs(u2[zero_m]) ** 2))
        if w2 > w1:
            u1, u2 = u2, u1
    else:
        u1 = np.asarray(modes[0], dtype=np.complex128)
        u2 = np.asarray(modes[1], dtype=np.complex128)
    for u in (u1, u2):
        if abs(np.linalg.norm(u) - 1.0) > 1e-8:
            raise ValueError("mode vectors must be normalized")
    if abs(np.vdot(u1, u2)) > 1e-10:
        raise ValueError("mode vectors must be orthogonal")

    chain = _sector_chain(basis)
    top = chain[0]
    embedded = np.zeros(top.dimension, dtype=np.complex128)
    for i in range(basis.dimension):
        embedded[top.index[tuple(basis.occupations[i])]] = state.amplitudes[i]

    u1c = np.conj(u1)
    u2c = np.conj(u2)
    n_orb = basis.n_orbitals
    raw = np.zeros(n_part + 1, dtype=np.complex128)
    for j in range(n_part + 1):
        # chain[pos] holds the (N - pos)-particle sector
        vec = embedded
        pos = 0
        for _ in range(n_part - j):
            vec = _apply_mode_annihilation(vec, u1c, chain[pos], chain[pos + 1], n_orb)
            pos += 1
        for _ in range(j):
            vec = _apply_mode_annihilation(vec, u2c, chain[pos], chain[pos + 1], n_orb)
            pos += 1
        raw[j] = vec[0] / math.sqrt(
            math.factorial(n_part - j) * math.factorial(j)
        )

    even = raw[0::2]
    odd = raw[1::2]
    p_values = np.abs(even) ** 2
    return TwoModeDecomposition(
        coefficients=even,
        p_values=p_values,
        fidelity=float(np.sum(p_values)),
        odd_weight=float(np.sum(np.abs(odd) ** 2)),
        mode_one=u1,
        mode_two=u2,
    )


def mode_entropy(decomposition: TwoModeDecomposition) -> float:
    """Base-2 entropy of the renormalized two-mode distribution."""
    total = float(np.sum(decomposition.p_values))
    if total <= 0:
        raise ValueError("decomposition carries no weight, entropy undefined")
    p = decomposition.p_values / total
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def angular_momentum_moments(state: ManyBodyState):
    """(<L>, <L^2>, Delta L) of a normalized state from its block weights."""
    if abs(state.norm - 1.0) > 1e-8:
        raise ValueError("moments require a normalized state")
    dist = l_distribution(state)
    ls = np.array(list(dist.keys()), dtype=float)
    ps = np.array(list(dist.values()))
    mean = float(np.dot(ls, ps))
    second = float(np.dot(ls**2, ps))
    var = max(second - mean**2, 0.0)
    return mean, second, math.sqrt(var)


def l_distribution(state: ManyBodyState) -> dict:
    """Probability of each total angular momentum block, keyed by L."""
    amps = state.amplitudes
    out = {}
    for l_value, rng in state.basis.blocks.items():
        out[int(l_value)] = float(
            np.sum(np.abs(amps[rng.start : rng.stop]) ** 2)
        )
    return out
