import numpy as np
import pytest

from qgeom.configuration import MatrixConfiguration
from qgeom.exceptions import (
    DegenerateOnSphereError,
    DegenerateStateError,
    GridTooCoarseError,
    ValidationError,
)
from qgeom.linalg import random_hermitian
from qgeom.quasicoherent import quasi_coherent_state
from qgeom.reference_geometries import SpinLabel, commuting_config, fuzzy_sphere
from qgeom.topology import (
    AffineSlice,
    BerryFlux,
    assign_charges,
    berry_flux,
    chern_number,
    default_search_box,
    find_degeneracy_points,
    metric_dimension,
    qgt,
    quantum_distance,
)


def test_qgt_is_tangential(spin_half):
    x = np.array([0.3, -0.4, 1.2])
    tensor = qgt(spin_half, x)
    np.testing.assert_allclose(tensor.g, tensor.g.T, atol=1e-12)
    np.testing.assert_allclose(tensor.omega, -tensor.omega.T, atol=1e-12)
    np.testing.assert_allclose(tensor.g @ x, 0.0, atol=1e-10)
    assert np.linalg.eigvalsh(tensor.g).min() > -1e-12


def finite_difference_qgt(cfg, x, h=1e-5):
    """``<d psi|(1 - P)|d psi>`` from central differences of gauge-fixed states."""
    psi = quasi_coherent_state(cfg, x).vector
    derivatives = []
    for step in h * np.eye(cfg.feature_dim):
        shifted = []
        for sign in (1.0, -1.0):
            phi = quasi_coherent_state(cfg, x + sign * step).vector
            shifted.append(phi * np.exp(-1j * np.angle(np.vdot(psi, phi))))
        derivatives.append((shifted[0] - shifted[1]) / (2 * h))
    d = np.stack(derivatives)
    projected = d - np.outer(d @ psi.conj(), psi)
    return projected.conj() @ projected.T


def random_configuration(n, dim, seed):
    rng = np.random.default_rng(seed)
    return MatrixConfiguration(np.stack([random_hermitian(n, rng) for _ in range(dim)]))


@pytest.mark.parametrize(
    'cfg, x',
    [
        (fuzzy_sphere(SpinLabel(1)), [0.3, -0.4, 1.2]),
        (fuzzy_sphere(SpinLabel(2)), [-0.7, 0.2, 0.5]),
        (fuzzy_sphere(SpinLabel(3), alpha=0.8), [0.1, 0.9, -0.3]),
        (random_configuration(5, 4, seed=0), [0.2, -0.1, 0.4, 0.3]),
        (random_configuration(3, 2, seed=1), [0.5, -0.5]),
    ],
)
def test_qgt_matches_finite_differences(cfg, x):
    x = np.asarray(x)
    np.testing.assert_allclose(qgt(cfg, x).q, finite_difference_qgt(cfg, x), atol=1e-6)


@pytest.mark.parametrize('two_j', [1, 2, 3])
@pytest.mark.parametrize('x', [[0.3, -0.4, 1.2], [0.0, 0.0, 1.0], [2.0, 1.0, 0.5]])
def test_qgt_of_spin_coherent_states(two_j, x):
    # g = j (1 - x x^T / r^2) / r^2 and |omega| = j |eps x| / r^3
    j = two_j / 2
    x = np.asarray(x)
    r = np.linalg.norm(x)
    tensor = qgt(fuzzy_sphere(SpinLabel(two_j)), x)
    expected_g = j * (np.eye(3) - np.outer(x, x) / r**2) / r**2
    np.testing.assert_allclose(tensor.g, expected_g, atol=1e-10)
    epsilon_x = np.array([[0.0, x[2], -x[1]], [-x[2], 0.0, x[0]], [x[1], -x[0], 0.0]])
    np.testing.assert_allclose(
        np.abs(tensor.omega), j * np.abs(epsilon_x) / r**3, atol=1e-10
    )


def test_unit_sphere_metric_spectra(spin_half, rng):
    points = rng.standard_normal((60, 3))
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    result = metric_dimension(spin_half, points)
    np.testing.assert_allclose(
        result.spectra, np.tile([0.5, 0.5, 0.0], (60, 1)), atol=1e-10
    )


def test_qgt_at_degeneracy_raises(spin_half):
    with pytest.raises(DegenerateStateError):
        qgt(spin_half, [0.0, 0.0, 0.0])


def test_metric_dimension_of_fuzzy_sphere(spin_one, rng):
    points = rng.standard_normal((25, 3))
    result = metric_dimension(spin_one, points)
    assert result.estimate == 2
    assert result.support == pytest.approx(1.0)
    assert result.spectra.shape == (25, 3)
    assert np.all(np.diff(result.spectra, axis=1) <= 1e-12)


def test_metric_dimension_skips_degenerate_points(spin_half):
    result = metric_dimension(spin_half, [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert result.skipped == [0]
    assert len(result.dimensions) == 1


def test_commuting_configuration_has_flat_metric():
    cfg = commuting_config([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    result = metric_dimension(cfg, [[0.1, 0.0, 0.0]])
    np.testing.assert_allclose(result.spectra, 0.0, atol=1e-12)
    assert result.estimate == 0


def test_quantum_distance():
    psi = np.array([1.0, 1.0j]) / np.sqrt(2)
    distance, phase = quantum_distance(psi, np.exp(1j * np.pi / 3) * psi)
    assert distance == pytest.approx(0.0, abs=1e-7)
    assert phase == pytest.approx(np.pi / 3)
    assert quantum_distance(psi, np.array([1.0, -1.0j]) / np.sqrt(2)) == (
        float('inf'),
        0.0,
    )
    assert quantum_distance(psi, -psi)[1] == pytest.approx(np.pi)
    with pytest.raises(ValidationError):
        quantum_distance(psi, np.array([1.0, 1.0]))


@pytest.mark.parametrize('n', [2, 8, 32])
def test_round_off_overlaps_count_as_orthogonal(n, rng):
    matrix = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    basis, _ = np.linalg.qr(matrix)
    # orthogonal up to round-off of the factorization
    assert quantum_distance(basis[:, 0], basis[:, 1]) == (float('inf'), 0.0)
    tiny = np.array([np.sqrt(1 - 1e-26), 1e-13])
    assert quantum_distance(np.array([0.0, 1.0]), tiny) == (float('inf'), 0.0)
    small = np.array([np.sqrt(1 - 1e-20), 1e-10])
    distance, _ = quantum_distance(np.array([0.0, 1.0]), small)
    assert distance == pytest.approx(np.sqrt(-np.log(1e-10)))


def test_quantum_distance_of_spin_coherent_states(spin_half):
    up = quasi_coherent_state(spin_half, [0.0, 0.0, 1.0])
    side = quasi_coherent_state(spin_half, [1.0, 0.0, 0.0])
    distance, _ = quantum_distance(up, side)
    # |<up|side>|^2 = 1/2
    assert distance == pytest.approx(np.sqrt(np.log(2) / 2))


@pytest.mark.parametrize('two_j', [1, 2, 3])
def test_chern_number_of_fuzzy_sphere(two_j):
    cfg = fuzzy_sphere(SpinLabel(two_j))
    assert abs(chern_number(cfg, [0.0, 0.0, 0.0], 0.5)) == two_j


@pytest.mark.parametrize('two_j', [1, 3])
def test_chern_number_survives_grid_refinement(two_j):
    cfg = fuzzy_sphere(SpinLabel(two_j))
    coarse = berry_flux(cfg, [0.1, -0.2, 0.0], 0.7, grid=(24, 24))
    fine = berry_flux(cfg, [0.1, -0.2, 0.0], 0.7, grid=(48, 48))
    assert coarse.residual <= 0.05
    assert fine.residual <= 0.05
    assert coarse.charge() == fine.charge()
    assert abs(fine.charge()) == two_j


@pytest.mark.parametrize('flux, charge', [(2.98, 3), (-1.01, -1), (0.0, 0), (0.04, 0)])
def test_charge_rounds_integral_flux(flux, charge):
    assert BerryFlux(flux, min_gap=1.0).charge() == charge


@pytest.mark.parametrize('flux', [0.5, 1.3, -2.2])
def test_charge_rejects_fractional_flux(flux):
    with pytest.raises(GridTooCoarseError):
        BerryFlux(flux, min_gap=1.0).charge()


def test_flux_vanishes_away_from_degeneracy(spin_half):
    flux = berry_flux(spin_half, [0.0, 0.0, 2.0], 0.5)
    assert flux.flux == pytest.approx(0.0, abs=1e-8)
    assert flux.min_gap > 1.0
    assert chern_number(spin_half, [0.0, 0.0, 2.0], 0.5) == 0


def test_sphere_through_degeneracy_raises(spin_half):
    with pytest.raises(DegenerateOnSphereError) as excinfo:
        berry_flux(spin_half, [0.0, 0.0, 0.5], 0.5)
    assert excinfo.value.index is not None


def test_grid_is_validated(spin_half):
    with pytest.raises(ValidationError):
        berry_flux(spin_half, [0.0, 0.0, 0.0], 0.5, grid=(1, 8))
    with pytest.raises(ValidationError):
        berry_flux(spin_half, [0.0, 0.0, 0.0], -1.0)


def test_search_box_covers_spectrum(spin_one):
    lower, upper = default_search_box(spin_one)
    assert np.all(lower < -1.0)
    assert np.all(upper > 1.0)


def test_single_monopole_of_spin_half(spin_half):
    points = find_degeneracy_points(spin_half, seed=3)
    assert len(points) == 1
    np.testing.assert_allclose(points[0].location, 0.0, atol=1e-3)
    charged = assign_charges(spin_half, points)
    assert abs(charged[0].charge) == 1
    assert charged[0].to_dict()['charge'] == charged[0].charge


def test_search_in_a_slice_of_higher_dimension():
    # spin one generators padded with a constant fourth observable
    spin = fuzzy_sphere(SpinLabel(2)).observables
    cfg_observables = np.concatenate([spin, 0.7 * np.eye(3)[None]])
    cfg = MatrixConfiguration(cfg_observables)
    frame = np.eye(3, 4)
    affine_slice = AffineSlice(np.array([0.0, 0.0, 0.0, 0.7]), frame)
    points = find_degeneracy_points(cfg, affine_slice, seed=0)
    assert len(points) == 1
    np.testing.assert_allclose(points[0].feature_point, [0.0, 0.0, 0.0, 0.7], atol=1e-3)
    assert abs(assign_charges(cfg, points)[0].charge) == 2


def test_slice_validation():
    with pytest.raises(ValidationError):
        AffineSlice(np.zeros(3), 2 * np.eye(3))
    with pytest.raises(ValidationError):
        AffineSlice(np.zeros(4), np.eye(3))


@pytest.mark.slow
def test_trained_sphere_splits_into_three_unit_monopoles(trained_sphere):
    points = find_degeneracy_points(trained_sphere, n_starts=32)
    assert len(points) == 3
    charged = assign_charges(trained_sphere, points)
    charges = [p.charge for p in charged]
    assert all(abs(c) == 1 for c in charges)
    center = np.mean([p.location for p in points], axis=0)
    assert sum(charges) == chern_number(trained_sphere, center, 0.5)


@pytest.mark.slow
def test_trained_two_spheres_charges_add_up(trained_two_spheres):
    points = find_degeneracy_points(trained_two_spheres, n_starts=64)
    assert 5 <= len(points) <= 9
    charged = assign_charges(trained_two_spheres, points)
    charges = [p.charge for p in charged]
    assert None not in charges
    locations = np.array([p.location for p in points])
    center = locations.mean(axis=0)
    radius = np.linalg.norm(locations - center, axis=1).max() + 0.5
    assert sum(charges) == chern_number(trained_two_spheres, center, radius)


@pytest.mark.slow
def test_conformal_maps_are_two_dimensional(trained_conformal, conformal_data):
    result = metric_dimension(trained_conformal, conformal_data.rows)
    assert np.mean(result.dimensions == 2) >= 0.8
    assert result.estimate == 2
