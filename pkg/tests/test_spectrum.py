import math

import numpy as np
import pytest

from becgyro.errors import BracketError
from becgyro.spectrum import (
    EigenCache,
    YrastManifold,
    find_critical_frequency,
    lowest_eigenpairs,
    parity_imbalance,
    perturbative_ground,
    sweep,
)

from conftest import make_model


def test_single_particle_levels_are_exact():
    # one particle, no deformation: E = 2n + |m| + 1 - omega * m
    model = make_model(1, l_max=4, g=0.0, anisotropy=0.0)
    solution = lowest_eigenpairs(model.assemble(0.5), k=3)
    np.testing.assert_allclose(solution.eigenvalues, [1.0, 2.0, 3.0], atol=1e-12)


def test_two_body_lowest_landau_ground_energy():
    # contact coupling g in the lowest Landau level: L=0 pair costs g/(2*pi)
    model = make_model(2, l_max=6, g=1.0, anisotropy=0.0, n_ll_max=1)
    solution = lowest_eigenpairs(model.assemble(0.0), k=1)
    assert solution.eigenvalues[0] == pytest.approx(2.0 + 1.0 / (2.0 * math.pi), abs=1e-10)


def test_dense_and_lanczos_agree(model6):
    hamiltonian = model6.assemble(0.8)
    dense = lowest_eigenpairs(hamiltonian, k=2, dense_threshold=10**9)
    lanczos = lowest_eigenpairs(hamiltonian, k=2, dense_threshold=1)
    assert dense.method == "dense"
    assert lanczos.method == "lanczos"
    np.testing.assert_allclose(dense.eigenvalues, lanczos.eigenvalues, atol=1e-8)
    assert abs(dense.ground.overlap(lanczos.ground)) > 1.0 - 1e-8


def test_eigenstates_orthonormal(model6):
    solution = lowest_eigenpairs(model6.assemble(0.6), k=3)
    vectors = np.column_stack([s.amplitudes for s in solution.states])
    gram = vectors.conj().T @ vectors
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-8)
    assert solution.residuals.max() < 1e-6


def test_k_out_of_range_raises():
    model = make_model(1, l_max=2, g=0.0, anisotropy=0.0)
    with pytest.raises(ValueError):
        lowest_eigenpairs(model.assemble(0.0), k=model.basis.dimension + 1)


def test_gap_requires_two_eigenvalues(model2):
    solution = lowest_eigenpairs(model2.assemble(0.3), k=1)
    with pytest.raises(ValueError):
        solution.gap


def test_deformation_opens_the_crossing(model6):
    # without the deformation the L=0 and L=N branches cross exactly;
    # with it the levels repel
    manifold = YrastManifold(model6)
    omega_star = (manifold.iso_energies[-1] - manifold.iso_energies[0]) / 6.0
    bare = lowest_eigenpairs(model6.assemble(omega_star, 0.0), k=2)
    deformed = lowest_eigenpairs(model6.assemble(omega_star, 1.0), k=2)
    assert bare.gap < 1e-10
    assert deformed.gap > 1e-3


def test_sweep_matches_pointwise_solves(model2, basis2, tmp_path):
    omegas = np.linspace(0.3, 0.7, 5)
    result = sweep(model2, basis2, omegas, k=2, store_states=True)
    for i, omega in enumerate(omegas):
        single = lowest_eigenpairs(model2.assemble(float(omega)), k=2)
        np.testing.assert_allclose(result.energies[i], single.eigenvalues, atol=1e-9)
    assert len(result.ground_states) == len(omegas)
    path = tmp_path / "sweep.csv"
    result.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header.split(",") == ["omega", "energy_0", "energy_1"]


def test_sweep_rejects_mismatched_basis(model6, basis2):
    with pytest.raises(ValueError):
        sweep(model6, basis2, [0.4, 0.5])


def test_eigen_cache_returns_same_object(model2):
    cache = EigenCache()
    first = cache.solve(model2, 0.5, k=2)
    second = cache.solve(model2, 0.5, k=2)
    assert second is first
    assert len(cache) == 1
    cache.solve(model2, 0.6, k=2)
    assert len(cache) == 2


def test_perturbative_ground_structure(model6):
    solution = perturbative_ground(model6, 0.8, k=3)
    assert solution.method == "perturbative"
    assert np.all(np.diff(solution.eigenvalues) >= 0)
    assert np.all(solution.residuals == 0)
    for state in solution.states:
        assert state.norm() == pytest.approx(1.0, abs=1e-12)
    manifold = YrastManifold(model6)
    _, vectors = manifold.eigen(0.8)
    np.testing.assert_allclose(
        solution.ground.amplitudes, manifold.embed(vectors[:, 0]), atol=1e-12
    )


def test_manifold_shape_and_couplings(model6):
    manifold = YrastManifold(model6)
    assert manifold.size == 4
    np.testing.assert_array_equal(manifold.l_values, [0.0, 2.0, 4.0, 6.0])
    h = manifold.h_eff(0.8)
    np.testing.assert_allclose(h, h.T, atol=1e-14)
    # couplings only between adjacent momentum blocks
    assert np.all(h[np.abs(np.subtract.outer(range(4), range(4))) > 1] == 0)


def test_manifold_embedding_is_isometric(model6):
    manifold = YrastManifold(model6)
    rng = np.random.default_rng(7)
    coeffs = rng.normal(size=manifold.size) + 1j * rng.normal(size=manifold.size)
    full = manifold.embed(coeffs)
    assert np.linalg.norm(full) == pytest.approx(np.linalg.norm(coeffs), abs=1e-12)
    np.testing.assert_allclose(manifold.project(full), coeffs, atol=1e-12)


def test_manifold_evolution_is_unitary(model6):
    manifold = YrastManifold(model6)
    rng = np.random.default_rng(3)
    coeffs = rng.normal(size=manifold.size) + 1j * rng.normal(size=manifold.size)
    coeffs /= np.linalg.norm(coeffs)
    np.testing.assert_allclose(manifold.evolve(coeffs, 0.8, 0.0), coeffs, atol=1e-12)
    moved = manifold.evolve(coeffs, 0.8, 17.0)
    assert np.linalg.norm(moved) == pytest.approx(1.0, abs=1e-12)


def test_manifold_ramp_identity_and_unitarity(model6):
    manifold = YrastManifold(model6)
    rng = np.random.default_rng(11)
    coeffs = rng.normal(size=manifold.size) + 1j * rng.normal(size=manifold.size)
    coeffs /= np.linalg.norm(coeffs)
    np.testing.assert_allclose(manifold.ramp(coeffs, 0.8, 0.8, 0.01), coeffs, atol=1e-14)
    swept = manifold.ramp(coeffs, 0.80, 0.81, 0.01)
    assert np.linalg.norm(swept) == pytest.approx(1.0, abs=1e-10)


def test_manifold_switch_off_labels_permute(model6):
    manifold = YrastManifold(model6)
    labels = manifold.switch_off_labels(0.8424)
    assert sorted(labels) == sorted(manifold.l_values)


def test_manifold_needs_two_blocks():
    model = make_model(1, l_max=4, g=0.0)
    with pytest.raises(ValueError):
        YrastManifold(model)


def test_parity_imbalance_tracks_the_ground_branch(model6):
    # condensed in m=0 well below the crossing, vortex branch above it
    low = lowest_eigenpairs(model6.assemble(0.2), k=1).ground
    assert parity_imbalance(low) > 0.9
    assert parity_imbalance(perturbative_ground(model6, 0.93).ground) < 0.0


def test_find_critical_frequency_perturbative(model6, basis6):
    crit = find_critical_frequency(
        model6, basis6, (0.70, 0.95), tol=1e-4, treatment="perturbative"
    )
    assert crit.treatment == "perturbative"
    assert crit.omega_c == pytest.approx(0.8424, abs=1e-3)
    assert crit.bracket_width <= 1e-4
    assert (crit.imbalance_left >= 0) != (crit.imbalance_right >= 0)
    assert crit.gap_at_critical > 0
    assert crit.evaluations.shape[1] == 3


def test_find_critical_frequency_rejects_bad_input(model6, basis6):
    with pytest.raises(ValueError):
        find_critical_frequency(model6, basis6, (0.9, 0.7))
    with pytest.raises(ValueError):
        find_critical_frequency(model6, basis6, (0.7, 0.9), treatment="born")


def test_find_critical_frequency_needs_a_flip():
    # without interactions the condensate never changes character below
    # the trap frequency, so the scan reports zero sign changes
    model = make_model(4, l_max=8, g=0.0)
    with pytest.raises(BracketError, match="found 0"):
        find_critical_frequency(
            model, model.basis, (0.2, 0.9), treatment="perturbative"
        )
