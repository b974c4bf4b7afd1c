import numpy as np
import pytest

from becgyro import FockState, Orbital, TruncationSpec, build_basis
from becgyro.basis import dump_text, enumerate_orbitals, landau_index, lookup
from becgyro.errors import BasisCapacityError
from becgyro.oracles import basis_block_counts_dp, explicit_states


def test_orbital_enumeration_lll_only():
    spec = TruncationSpec(n_particles=2, l_max=2, n_ll_max=1)
    orbs = enumerate_orbitals(spec)
    assert set((o.n, o.m) for o in orbs) == {(0, 0), (0, 1), (0, 2)}


def test_orbital_enumeration_second_level():
    spec = TruncationSpec(n_particles=2, l_max=2, n_ll_max=2)
    orbs = set((o.n, o.m) for o in enumerate_orbitals(spec))
    assert orbs == {
        (0, 0), (0, 1), (0, 2),
        (0, -1), (1, 0), (1, 1), (1, 2),
    }
    # one more Landau quantum would be needed for (0,-2)
    assert (0, -2) not in orbs


def test_landau_index_values():
    lll = FockState.from_pairs([(Orbital(0, 0), 2), (Orbital(0, 3), 1)])
    assert landau_index(lll) == 1
    negm = FockState.from_pairs([(Orbital(0, -1), 1), (Orbital(0, 1), 2)])
    assert landau_index(negm) == 2
    radial = FockState.from_pairs([(Orbital(1, 2), 1), (Orbital(0, 0), 2)])
    assert landau_index(radial) == 2


def test_two_particle_lll_hand_count():
    basis = build_basis(TruncationSpec(n_particles=2, l_max=2, n_ll_max=1))
    assert basis.dimension == 3
    assert len(basis.block_of(0)) == 1
    assert len(basis.block_of(2)) == 2


def test_single_particle_basis():
    basis = build_basis(TruncationSpec(n_particles=1, l_max=0, n_ll_max=1))
    assert basis.dimension == 1
    state = basis.states[0]
    assert state.count(Orbital(0, 0)) == 1


@pytest.mark.parametrize("n_ll_max", [1, 2])
@pytest.mark.parametrize("n_particles", [2, 3, 4, 5, 6])
def test_dimension_matches_counting_oracle(n_particles, n_ll_max):
    spec = TruncationSpec(n_particles=n_particles, l_max=10, n_ll_max=n_ll_max)
    basis = build_basis(spec)
    counts = basis_block_counts_dp(
        enumerate_orbitals(spec), n_particles, spec.landau_budget, 0, spec.l_max
    )
    expected = {l: c for l, c in counts.items() if l % 2 == 0}
    got = {l: len(basis.block_of(l)) for l in basis.blocks}
    assert got == expected
    assert basis.dimension == sum(expected.values())


def test_states_match_generate_and_filter_oracle():
    spec = TruncationSpec(n_particles=4, l_max=8)
    basis = build_basis(spec)
    orbitals = enumerate_orbitals(spec)
    oracle = explicit_states(orbitals, spec.n_particles, spec.landau_budget,
                             0, spec.l_max)
    oracle = {occ for occ in oracle
              if sum(orbitals[i].m * occ[i] for i in range(len(occ))) % 2 == 0}
    got = {tuple(s.count(orb) for orb in orbitals) for s in basis.states}
    assert got == oracle


def test_block_consistency():
    basis = build_basis(TruncationSpec(n_particles=5, l_max=9))
    total = 0
    for l_value in basis.blocks:
        rng = basis.block_of(l_value)
        total += len(rng)
        for i in rng:
            assert basis.states[i].total_l == l_value
    assert total == basis.dimension
    labels = basis.state_l_values()
    assert np.all(labels == [s.total_l for s in basis.states])


def test_lookup_round_trip():
    spec = TruncationSpec(n_particles=3, l_max=7, even_parity=False)
    basis = build_basis(spec)
    for i, state in enumerate(basis.states):
        assert lookup(basis, state) == i


def test_lookup_rejects_excluded_states():
    basis = build_basis(TruncationSpec(n_particles=2, l_max=4))
    odd_l = FockState.from_pairs([(Orbital(0, 0), 1), (Orbital(0, 1), 1)])
    with pytest.raises(KeyError):
        lookup(basis, odd_l)
    deep = FockState.from_pairs([(Orbital(1, 0), 2)])  # landau index 3
    with pytest.raises(KeyError):
        lookup(basis, deep)


def test_build_is_deterministic():
    spec = TruncationSpec(n_particles=4, l_max=8)
    a = build_basis(spec)
    b = build_basis(spec)
    assert a.states == b.states


def test_capacity_guard():
    with pytest.raises(BasisCapacityError):
        build_basis(TruncationSpec(n_particles=6, l_max=10), capacity=5)


def test_text_dump_shape():
    basis = build_basis(TruncationSpec(n_particles=2, l_max=2, n_ll_max=1))
    lines = dump_text(basis).strip().splitlines()
    assert len(lines) == basis.dimension
    # each line: "L n_LL n,m:count ..."
    for line, state in zip(lines, basis.states):
        fields = line.split()
        assert int(fields[0]) == state.total_l
        assert int(fields[1]) == landau_index(state)


def test_spec_validation():
    with pytest.raises(ValueError):
        TruncationSpec(n_particles=0, l_max=4)
    with pytest.raises(ValueError):
        TruncationSpec(n_particles=2, l_max=-1)
    with pytest.raises(ValueError):
        TruncationSpec(n_particles=2, l_max=4, n_ll_max=0)
