"""Occupation-number basis for N bosons in a rotating 2D harmonic trap.

Single-particle orbitals are the isotropic oscillator eigenstates labelled
(n, m) with radial index n >= 0 and angular momentum m, energy 2n + |m| + 1
in trap units.  A many-body state is a bosonic occupation pattern over these
orbitals.  The basis is truncated three ways:

* total angular momentum L = sum_k m_k N_k restricted to 0 <= L <= l_max,
  optionally to even L only (the rotation-symmetric sector relevant here),
* a Landau-level cap: the state-level index
  n_LL = 1 + sum_k (n_k + (|m_k| - m_k)/2) N_k may not exceed n_ll_max,
* orbital angular momentum per particle capped at m <= l_max.

The Landau index counts oscillator quanta that survive in the limit of
fast rotation; n_LL = 1 means every particle sits in the lowest Landau
level (n = 0, m >= 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BasisCapacityError

__all__ = [
    "Orbital",
    "TruncationSpec",
    "FockState",
    "ManyBodyBasis",
    "enumerate_orbitals",
    "enumerate_fock_states",
    "landau_index",
    "build_basis",
    "lookup",
    "dump_text",
]

DEFAULT_CAPACITY = 500_000


@dataclass(frozen=True, order=True)
class Orbital:
    """One oscillator eigenstate (n, m) of the isotropic 2D trap."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"radial index must be >= 0, got n={self.n}")

    @property
    def landau_quanta(self) -> int:
        """Quanta n + (|m| - m)/2 this orbital adds beyond the lowest Landau level."""
        return self.n + (abs(self.m) - self.m) // 2

    @property
    def landau_index(self) -> int:
        """Landau level of the orbital, 1 for the lowest."""
        return 1 + self.landau_quanta

    @property
    def energy(self) -> float:
        """Oscillator energy 2n + |m| + 1 at zero rotation, trap units."""
        return 2 * self.n + abs(self.m) + 1


@dataclass(frozen=True)
class TruncationSpec:
    """Defines which occupation patterns enter the many-body basis."""

    n_particles: int
    l_max: int
    n_ll_max: int = 2
    even_parity: bool = True

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if self.l_max < 0:
            raise ValueError("l_max must be >= 0")
        if self.n_ll_max < 1:
            raise ValueError("n_ll_max must be >= 1")

    @property
    def landau_budget(self) -> int:
        """Maximum total quanta beyond the lowest Landau level."""
        return self.n_ll_max - 1


@dataclass(frozen=True)
class FockState:
    """Bosonic occupation pattern, stored as ((orbital, count), ...) pairs.

    Pairs are kept in canonical orbital order and only orbitals with
    count >= 1 appear.
    """

    occupations: tuple[tuple[Orbital, int], ...]

    @staticmethod
    def from_pairs(pairs) -> "FockState":
        """Build from any iterable of ((n, m) or Orbital, count) pairs."""
        canon = []
        for orb, count in pairs:
            if not isinstance(orb, Orbital):
                orb = Orbital(*orb)
            if count < 0:
                raise ValueError("occupation counts must be >= 0")
            if count:
                canon.append((orb, int(count)))
        canon.sort(key=lambda item: _orbital_sort_key(item[0]))
        return FockState(tuple(canon))

    @property
    def n_particles(self) -> int:
        return sum(count for _, count in self.occupations)

    @property
    def total_l(self) -> int:
        return sum(orb.m * count for orb, count in self.occupations)

    def count(self, orbital: Orbital) -> int:
        for orb, c in self.occupations:
            if orb == orbital:
                return c
        return 0


def landau_index(state: FockState) -> int:
    """State-level Landau index 1 + sum_k (n_k + (|m_k| - m_k)/2) N_k."""
    return 1 + sum(orb.landau_quanta * count for orb, count in state.occupations)


def _orbital_sort_key(orb: Orbital):
    # canonical order: Landau level first, then m, then n
    return (orb.landau_index, orb.m, orb.n)


def enumerate_orbitals(spec: TruncationSpec) -> tuple[Orbital, ...]:
    """All orbitals a basis state may occupy, in canonical order.

    An orbital is admissible when a single particle in it fits the spec:
    its Landau index is at most n_ll_max and m <= l_max.  Negative m is
    allowed down to the point where the Landau index overflows, i.e.
    m >= -(n_ll_max - 1).
    """
    orbs = []
    for n in range(spec.n_ll_max):
        for m in range(-(spec.n_ll_max - 1), spec.l_max + 1):
            orb = Orbital(n, m)
            if orb.landau_index <= spec.n_ll_max:
                orbs.append(orb)
    orbs.sort(key=_orbital_sort_key)
    return tuple(orbs)


def enumerate_fock_states(
    orbitals,
    n_particles: int,
    l_min: int,
    l_max: int,
    landau_budget: int,
    even_parity: bool = False,
    capacity: int = DEFAULT_CAPACITY,
):
    """Yield occupation tuples (aligned with `orbitals`) meeting the cuts.

    Generic workhorse behind build_basis and the particle-number sectors
    used by mode projections.  States satisfy sum N_k = n_particles,
    l_min <= L <= l_max, total Landau quanta <= landau_budget, and
    optionally even L.  Enumeration order is depth-first over orbitals in
    the given order; callers sort if they need a specific order.
    """
    n_orb = len(orbitals)
    ms = [orb.m for orb in orbitals]
    costs = [orb.landau_quanta for orb in orbitals]
    # suffix bounds on the reachable angular momentum per remaining particle
    suff_max = [0] * (n_orb + 1)
    suff_min = [0] * (n_orb + 1)
    suff_max[n_orb] = -(10**9)
    suff_min[n_orb] = 10**9
    for j in range(n_orb - 1, -1, -1):
        suff_max[j] = max(ms[j], suff_max[j + 1])
        suff_min[j] = min(ms[j], suff_min[j + 1])

    occ = [0] * n_orb
    emitted = 0

    def recurse(j, particles_left, l_acc, budget_left):
        nonlocal emitted
        if particles_left == 0:
            if l_acc < l_min or l_acc > l_max:
                return
            if even_parity and l_acc % 2:
                return
            emitted += 1
            if emitted > capacity:
                raise BasisCapacityError(
                    f"enumeration exceeded capacity of {capacity} states"
                )
            yield tuple(occ)
            return
        if j == n_orb:
            return
        # bound the angular momentum still reachable
        if l_acc + particles_left * suff_max[j] < l_min:
            return
        if l_acc + particles_left * suff_min[j] > l_max:
            return
        cost = costs[j]
        max_here = particles_left
        if cost > 0:
            max_here = min(max_here, budget_left // cost)
        for cnt in range(max_here, -1, -1):
            occ[j] = cnt
            yield from recurse(
                j + 1,
                particles_left - cnt,
                l_acc + cnt * ms[j],
                budget_left - cnt * cost,
            )
        occ[j] = 0

    yield from recurse(0, n_particles, 0, landau_budget)


@dataclass(frozen=True)
class ManyBodyBasis:
    """Ordered collection of Fock states grouped into total-L blocks."""

    spec: TruncationSpec
    orbitals: tuple[Orbital, ...]
    states: tuple[FockState, ...]
    blocks: dict  # L -> range of state indices
    occupations: np.ndarray = field(repr=False)  # (dimension, n_orbitals) ints
    index: dict = field(repr=False)  # occupation tuple -> state index

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def n_orbitals(self) -> int:
        return len(self.orbitals)

    def orbital_position(self, orbital: Orbital) -> int:
        return self._orbital_pos[orbital]

    def __post_init__(self):
        object.__setattr__(
            self, "_orbital_pos", {orb: k for k, orb in enumerate(self.orbitals)}
        )

    def block_of(self, l_value: int) -> range:
        return self.blocks[l_value]

    def state_l_values(self) -> np.ndarray:
        """Total angular momentum per basis state, aligned with state order."""
        out = np.empty(self.dimension, dtype=np.int64)
        for l_value, rng in self.blocks.items():
            out[rng.start : rng.stop] = l_value
        return out


def build_basis(spec: TruncationSpec, capacity: int = DEFAULT_CAPACITY) -> ManyBodyBasis:
    """Enumerate the truncated many-body basis for `spec`.

    States are grouped by total angular momentum L in ascending block
    order and sorted lexicographically by occupation tuple inside each
    block.  Raises BasisCapacityError if more than `capacity` states
    would be produced.
    """
    orbitals = enumerate_orbitals(spec)
    per_l = {}
    for occ in enumerate_fock_states(
        orbitals,
        spec.n_particles,
        l_min=0,
        l_max=spec.l_max,
        landau_budget=spec.landau_budget,
        even_parity=spec.even_parity,
        capacity=capacity,
    ):
        l_value = int(np.dot(occ, [orb.m for orb in orbitals]))
        per_l.setdefault(l_value, []).append(occ)

    states = []
    blocks = {}
    index = {}
    rows = []
    for l_value in sorted(per_l):
        start = len(states)
        for occ in sorted(per_l[l_value]):
            index[occ] = len(states)
            rows.append(occ)
            states.append(
                FockState.from_pairs(
                    (orbitals[k], c) for k, c in enumerate(occ) if c
                )
            )
        blocks[l_value] = range(start, len(states))

    occ_array = (
        np.array(rows, dtype=np.int64)
        if rows
        else np.zeros((0, len(orbitals)), dtype=np.int64)
    )
    return ManyBodyBasis(
        spec=spec,
        orbitals=orbitals,
        states=tuple(states),
        blocks=blocks,
        occupations=occ_array,
        index=index,
    )


def lookup(basis: ManyBodyBasis, state: FockState) -> int:
    """Index of `state` in `basis`; KeyError if it is not a member."""
    occ = [0] * basis.n_orbitals
    for orb, count in state.occupations:
        pos = basis._orbital_pos.get(orb)
        if pos is None:
            raise KeyError(f"orbital {orb} not part of this basis")
        occ[pos] = count
    key = tuple(occ)
    if key not in basis.index:
        raise KeyError(f"state {state} not in basis")
    return basis.index[key]


def dump_text(basis: ManyBodyBasis) -> str:
    """Plain-text export, one state per line: 'L n_LL n,m:count ...'."""
    lines = []
    for state in basis.states:
        occ_txt = " ".join(
            f"{orb.n},{orb.m}:{count}" for orb, count in state.occupations
        )
        lines.append(f"{state.total_l} {landau_index(state)} {occ_txt}")
    return "\n".join(lines) + "\n"
