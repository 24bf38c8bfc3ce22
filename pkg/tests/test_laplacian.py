import numpy as np
import pytest

from qgeom.configuration import MatrixConfiguration
from qgeom.exceptions import FitError, NonProjectorError, ValidationError
from qgeom.laplacian import (
    classify_configuration,
    counting_function,
    eigenmap_coordinates,
    eigenmap_overlap,
    laplacian_energy,
    laplacian_spectrum,
    matrix_laplacian,
    nonlocal_correlation,
    observable_entropy,
    project_observables,
    reduced_laplacian,
    weyl_dimension,
    zero_mode_components,
)
from qgeom.linalg import random_hermitian
from qgeom.quasicoherent import quasi_coherent_states
from qgeom.reference_geometries import (
    SpinLabel,
    block_sum,
    commuting_config,
    fuzzy_cpn,
    fuzzy_sphere,
    fuzzy_torus,
)


def sphere_levels(two_j):
    levels = range(two_j + 1)
    return np.concatenate([np.full(2 * k + 1, k * (k + 1.0)) for k in levels])


@pytest.mark.parametrize('two_j', [1, 2, 4])
def test_fuzzy_sphere_spectrum(two_j):
    analysis = laplacian_spectrum(fuzzy_sphere(SpinLabel(two_j)))
    np.testing.assert_allclose(analysis.eigenvalues, sphere_levels(two_j), atol=1e-9)


def test_spectrum_scales_with_alpha():
    analysis = laplacian_spectrum(fuzzy_sphere(SpinLabel(2), alpha=0.5))
    np.testing.assert_allclose(analysis.eigenvalues, 0.25 * sphere_levels(2), atol=1e-9)


def test_laplacian_is_hermitian_and_positive(spin_one):
    laplacian = matrix_laplacian(spin_one)
    np.testing.assert_allclose(laplacian, laplacian.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(laplacian).min() > -1e-10


def test_eigenmaps_are_orthonormal_and_hermitian(spin_one):
    analysis = laplacian_spectrum(spin_one)
    maps = analysis.eigenmaps
    gram = np.einsum('ijk,lkj->il', maps, maps)
    np.testing.assert_allclose(gram, np.eye(9), atol=1e-10)
    np.testing.assert_allclose(maps, np.swapaxes(maps, 1, 2).conj(), atol=1e-12)
    np.testing.assert_allclose(maps[0], np.eye(3) / np.sqrt(3), atol=1e-12)
    for value, y in zip(analysis.eigenvalues, maps):
        assert laplacian_energy(spin_one, y) == pytest.approx(value, abs=1e-9)


def test_overlap_lives_in_the_first_level(spin_one):
    analysis = laplacian_spectrum(spin_one)
    overlap = eigenmap_overlap(analysis, spin_one)
    np.testing.assert_allclose(overlap[:, 0], 0, atol=1e-10)
    np.testing.assert_allclose(overlap[:, 4:], 0, atol=1e-10)
    # Parseval: Tr(J_a^2) = 2 for spin one
    np.testing.assert_allclose(np.sum(overlap**2, axis=1), 2.0, atol=1e-10)
    projected = project_observables(spin_one, analysis, 4)
    np.testing.assert_allclose(projected.observables, spin_one.observables, atol=1e-10)


def test_mode_counts_are_checked(spin_one):
    analysis = laplacian_spectrum(spin_one)
    with pytest.raises(ValidationError):
        project_observables(spin_one, analysis, 0)
    with pytest.raises(ValidationError):
        reduced_laplacian(analysis, 9)
    assert reduced_laplacian(analysis, 3).shape == (9, 9)


def test_fuzzy_torus_spectrum():
    analysis = laplacian_spectrum(fuzzy_torus(4))
    assert analysis.zero_mode_count() == 1
    np.testing.assert_allclose(analysis.eigenvalues[1:5], 2.0, atol=1e-9)
    assert analysis.eigenvalues[5] > 2.0 + 1e-6


def test_cpn_has_one_nonzero_level():
    analysis = laplacian_spectrum(fuzzy_cpn(3))
    np.testing.assert_allclose(analysis.eigenvalues[1:], 12.0, atol=1e-9)
    with pytest.raises(FitError):
        weyl_dimension(analysis)


def test_weyl_dimension_of_fuzzy_sphere():
    analysis = laplacian_spectrum(fuzzy_sphere(SpinLabel(15)))
    levels, counts = counting_function(analysis)
    assert counts[-1] == 16 * 16 - 1
    assert np.all(np.diff(levels) > 0)
    assert 1.6 <= weyl_dimension(analysis) <= 2.4


def test_weyl_window_needs_enough_eigenvalues(spin_one):
    with pytest.raises(FitError):
        weyl_dimension(laplacian_spectrum(spin_one))


def test_commuting_components():
    cfg = commuting_config([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    analysis = laplacian_spectrum(cfg)
    assert analysis.zero_mode_count() == 3
    components = zero_mode_components(analysis)
    assert len(components) == 3
    assert components.ranks == [1, 1, 1]
    assert components.residual == pytest.approx(0.0, abs=1e-8)
    for p in components.projectors:
        np.testing.assert_allclose(p @ p, p, atol=1e-8)


def test_two_spheres_split_into_two_components(spin_half):
    cfg = block_sum(spin_half, spin_half.shifted([0.0, 0.0, 3.0]))
    analysis = laplacian_spectrum(cfg)
    assert analysis.zero_mode_count() == 2
    components = zero_mode_components(analysis)
    assert sorted(components.ranks) == [2, 2]
    np.testing.assert_allclose(components.projectors.sum(axis=0), np.eye(4), atol=1e-8)


def test_single_component(spin_one):
    components = zero_mode_components(laplacian_spectrum(spin_one))
    assert components.ranks == [3]


def test_identical_blocks_are_not_projectors(spin_half):
    analysis = laplacian_spectrum(block_sum(spin_half, spin_half))
    assert analysis.zero_mode_count() == 4
    with pytest.raises(NonProjectorError):
        zero_mode_components(analysis)


def test_classification():
    assert classify_configuration(commuting_config(np.eye(3))).tag == 'classical'
    half = classify_configuration(fuzzy_sphere(SpinLabel(1)))
    assert half.tag == 'deep-quantum'
    assert half.ratio == pytest.approx(2.0)
    assert classify_configuration(fuzzy_sphere(SpinLabel(15))).tag == (
        'almost-commutative'
    )
    with pytest.raises(ValidationError):
        classify_configuration(MatrixConfiguration(np.eye(2)[None]))


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_random_pair_is_deep_quantum(seed):
    rng = np.random.default_rng(seed)
    cfg = MatrixConfiguration(np.stack([random_hermitian(32, rng) for _ in range(2)]))
    classification = classify_configuration(cfg)
    assert classification.tag == 'deep-quantum'
    assert classification.ratio == pytest.approx(np.sqrt(2), abs=0.1)


def test_observable_entropy():
    assert observable_entropy(np.eye(4) / 2) == pytest.approx(np.log(4))
    with pytest.raises(ValidationError):
        observable_entropy(np.eye(2))


def test_nonlocal_correlation_and_coordinates(spin_half):
    states = quasi_coherent_states(spin_half, [[0.0, 0.0, 1.0]])
    psi = states[0].vector
    assert nonlocal_correlation(states, np.outer(psi, psi.conj())) == pytest.approx(1.0)
    analysis = laplacian_spectrum(spin_half)
    coordinates = eigenmap_coordinates(analysis, states, [0, 1, 2, 3])
    assert coordinates.shape == (1, 4)
    assert coordinates[0, 0] == pytest.approx(1 / np.sqrt(2))


@pytest.mark.slow
def test_trained_two_spheres_have_two_soft_modes(trained_two_spheres):
    eigenvalues = laplacian_spectrum(trained_two_spheres).eigenvalues
    assert eigenvalues[2] >= 3 * eigenvalues[1]


@pytest.mark.slow
def test_nonuniform_sphere_levels_group_as_one_three_five(trained_nonuniform_sphere):
    eigenvalues = laplacian_spectrum(trained_nonuniform_sphere).eigenvalues
    first, second = eigenvalues[1:4], eigenvalues[4:9]
    gaps = [first[0] - eigenvalues[0], second[0] - first[-1]]
    spreads = [np.ptp(first), np.ptp(second)]
    assert max(spreads) < min(gaps)


@pytest.mark.slow
def test_weyl_dimension_of_conformal_maps(trained_conformal):
    assert 1.5 <= weyl_dimension(laplacian_spectrum(trained_conformal)) <= 2.5
