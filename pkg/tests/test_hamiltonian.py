import math

import numpy as np
import pytest

from becgyro import (
    HamiltonianModel,
    ModelParams,
    Orbital,
    TruncationSpec,
    build_basis,
)
from becgyro.basis import enumerate_orbitals
from becgyro.hamiltonian import (
    InteractionTensor,
    anisotropy_element,
    interaction_element,
    lll_interaction_element,
    load_interaction_tensor,
    save_interaction_tensor,
    single_particle_energy,
)
from becgyro.oracles import (
    anisotropy_element_cartesian,
    interaction_element_cartesian,
)

from conftest import make_model


def test_single_particle_energies():
    assert single_particle_energy(Orbital(0, 0), 0.3) == 1.0
    assert single_particle_energy(Orbital(0, 1), 0.9) == pytest.approx(1.1)
    assert single_particle_energy(Orbital(1, -2), 0.5) == pytest.approx(6.0)


def test_contact_element_ground():
    val = interaction_element(Orbital(0, 0), Orbital(0, 0),
                              Orbital(0, 0), Orbital(0, 0))
    assert val == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-12)


def test_contact_element_selection_rule():
    val = interaction_element(Orbital(0, 0), Orbital(0, 1),
                              Orbital(0, 0), Orbital(0, 0))
    assert val == 0.0


def test_lll_closed_form_matches_general_element():
    for m1 in range(4):
        for m2 in range(4):
            for m3 in range(m1 + m2 + 1):
                m4 = m1 + m2 - m3
                if m4 > 4:
                    continue
                closed = lll_interaction_element(m1, m2, m3, m4)
                general = interaction_element(
                    Orbital(0, m1), Orbital(0, m2), Orbital(0, m3), Orbital(0, m4)
                )
                assert closed == pytest.approx(general, abs=1e-12)


def test_lll_closed_form_value():
    # (1/2pi) (m1+m2)! / (2^(m1+m2) sqrt(prod m_i!))
    got = lll_interaction_element(2, 1, 3, 0)
    want = (math.factorial(3) / (2.0**3 * math.sqrt(2.0 * 1 * 6 * 1))) / (2 * math.pi)
    assert got == pytest.approx(want, rel=1e-12)


def test_contact_elements_match_quadrature_oracle():
    orbs = [Orbital(n, m) for n in (0, 1) for m in range(-1, 3)]
    checked = 0
    for k1 in orbs:
        for k2 in orbs:
            for k3 in orbs:
                for k4 in orbs:
                    if k1.m + k2.m != k3.m + k4.m:
                        continue
                    got = interaction_element(k1, k2, k3, k4)
                    ref = interaction_element_cartesian(k1, k2, k3, k4)
                    assert abs(ref.imag) < 1e-10
                    assert got == pytest.approx(ref.real, abs=1e-8)
                    checked += 1
    assert checked > 50


def test_quadrupole_ladder_value():
    assert anisotropy_element(Orbital(0, 2), Orbital(0, 0)) == pytest.approx(
        math.sqrt(2.0), abs=1e-10
    )


def test_quadrupole_selection_rule():
    assert anisotropy_element(Orbital(0, 1), Orbital(0, 1)) == 0.0
    assert anisotropy_element(Orbital(0, 3), Orbital(0, 0)) == 0.0


def test_quadrupole_matches_quadrature_oracle():
    orbs = [Orbital(n, m) for n in (0, 1) for m in range(-2, 4)]
    for k in orbs:
        for l in orbs:
            got = anisotropy_element(k, l)
            ref = anisotropy_element_cartesian(k, l)
            assert abs(ref.imag) < 1e-10
            assert got == pytest.approx(ref.real, abs=1e-8)
            # symmetric one-body operator
            assert got == pytest.approx(anisotropy_element(l, k), abs=1e-12)


def test_tensor_symmetries(model2):
    tensor = model2.tensor
    orbs = model2.basis.orbitals
    rng = np.random.default_rng(7)
    for _ in range(200):
        i1, i2, i3, i4 = rng.integers(0, len(orbs), size=4)
        v = tensor.element(i1, i2, i3, i4)
        assert v == tensor.element(i2, i1, i3, i4)
        assert v == tensor.element(i1, i2, i4, i3)
        assert v == tensor.element(i3, i4, i1, i2)
        if orbs[i1].m + orbs[i2].m != orbs[i3].m + orbs[i4].m:
            assert v == 0.0


def test_single_particle_model_is_diagonal():
    model = make_model(1, l_max=4, g=3.7)
    h = model.assemble(0.6).matrix.toarray()
    off = h - np.diag(np.diag(h))
    # only the deformation couples orbitals for one particle
    model0 = make_model(1, l_max=4, g=3.7, anisotropy=0.0)
    h0 = model0.assemble(0.6).matrix.toarray()
    assert np.allclose(h0 - np.diag(np.diag(h0)), 0.0, atol=1e-14)
    expected = [
        single_particle_energy(state.occupations[0][0], 0.6)
        for state in model0.basis.states
    ]
    assert np.allclose(np.diag(h0), expected, atol=1e-14)
    assert np.any(off != 0.0)


def test_two_particle_lll_interacting_block():
    model = make_model(2, l_max=0, g=1.3, anisotropy=0.0, n_ll_max=1)
    h = model.assemble(0.0).matrix.toarray()
    assert h.shape == (1, 1)
    assert h[0, 0] == pytest.approx(2.0 + 1.3 / (2.0 * math.pi), rel=1e-12)


def test_omega_dependence_is_diagonal_l_shift(model2):
    basis = model2.basis
    h1 = model2.assemble(0.3).matrix.toarray()
    h2 = model2.assemble(0.8).matrix.toarray()
    labels = basis.state_l_values()
    shift = np.diag((0.3 - 0.8) * labels)  # H(w2) - H(w1) = -(w2-w1) L
    assert np.allclose(h2 - h1, -np.diag((0.8 - 0.3) * labels), atol=1e-12)
    assert np.allclose(h2 - h1, shift, atol=1e-12)


def test_symmetry_and_block_structure(model6):
    h = model6.assemble(0.85)
    m = h.matrix
    asym = (m - m.T).tocoo()
    assert len(asym.data) == 0 or np.max(np.abs(asym.data)) < 1e-12
    labels = model6.basis.state_l_values()
    coo = m.tocoo()
    dl = np.abs(labels[coo.row] - labels[coo.col])
    assert set(np.unique(dl)).issubset({0, 2})


def test_isotropic_part_preserves_blocks(model6):
    model = model6.replace_params(anisotropy=0.0)
    h = model.assemble(0.5)
    labels = model.basis.state_l_values()
    rng = np.random.default_rng(3)
    vec = np.where(labels == 6, rng.normal(size=model.basis.dimension), 0.0)
    out = h.apply(vec)
    assert np.all(out[labels != 6] == 0.0)


def test_apply_matches_dense_product(model2):
    h = model2.assemble(0.44)
    rng = np.random.default_rng(11)
    vec = rng.normal(size=model2.basis.dimension)
    assert np.allclose(h.apply(vec), h.matrix.toarray() @ vec, atol=1e-12)
    assert np.allclose(h.apply(2.5 * vec), 2.5 * h.apply(vec), atol=1e-12)


def test_noninteracting_spectrum_is_additive():
    # g=0, A=0: eigenvalues are sums of single-particle energies
    model = make_model(2, l_max=4, g=0.0, anisotropy=0.0)
    omega = 0.7
    h = model.assemble(omega).matrix.toarray()
    got = np.sort(np.linalg.eigvalsh(h))
    expected = []
    orbs = model.basis.orbitals
    for state in model.basis.states:
        expected.append(sum(single_particle_energy(o, omega) * state.count(o)
                            for o in orbs))
    assert np.allclose(got, np.sort(expected), atol=1e-10)


def test_replace_params_shares_structure(model2):
    stronger = model2.replace_params(g=2.0)
    assert stronger.basis is model2.basis
    assert stronger.params.anisotropy == model2.params.anisotropy
    h1 = model2.assemble(0.5).matrix
    h2 = stronger.assemble(0.5).matrix
    diff = (h2 - h1).tocoo()
    labels = model2.basis.state_l_values()
    # pure interaction difference: block diagonal
    assert np.all(labels[diff.row] == labels[diff.col])


def test_tensor_cache_round_trip(tmp_path):
    spec = TruncationSpec(n_particles=2, l_max=4)
    orbitals = enumerate_orbitals(spec)
    tensor = InteractionTensor(orbitals, order=40)
    save_interaction_tensor(tensor, tmp_path)
    loaded = load_interaction_tensor(orbitals, 40, tmp_path)
    assert loaded is not None
    for key, val in tensor._elements.items():
        assert loaded._elements[key] == val
    assert len(loaded) == len(tensor)
    # different quadrature order is a different cache entity
    assert load_interaction_tensor(orbitals, 41, tmp_path) is None


def test_model_rejects_mismatched_basis():
    spec_a = TruncationSpec(n_particles=2, l_max=4)
    spec_b = TruncationSpec(n_particles=2, l_max=6)
    basis_b = build_basis(spec_b)
    with pytest.raises(ValueError):
        HamiltonianModel(ModelParams(g=1.0, anisotropy=0.03, spec=spec_a), basis_b)


def test_params_validation():
    spec = TruncationSpec(n_particles=2, l_max=4)
    with pytest.raises(ValueError):
        ModelParams(g=-0.1, anisotropy=0.03, spec=spec)
    with pytest.raises(ValueError):
        ModelParams(g=1.0, anisotropy=1.5, spec=spec)
    params = ModelParams(g=0.5, anisotropy=0.03, spec=spec)
    assert params.coupling_per_particle == pytest.approx(0.5 * 2 / 6.0)
