import numpy as np
import pytest

from qgeom.exceptions import ValidationError
from qgeom.reference_geometries import (
    SpinLabel,
    angular_momentum,
    block_sum,
    clock_shift,
    commuting_config,
    fuzzy_cpn,
    fuzzy_sphere,
    fuzzy_torus,
    gell_mann_matrices,
    q_number,
    reference_configuration,
)


@pytest.mark.parametrize('two_j', [1, 2, 3, 6])
def test_su2_algebra(two_j):
    spin = SpinLabel(two_j)
    j1, j2, j3 = angular_momentum(spin)
    np.testing.assert_allclose(j1 @ j2 - j2 @ j1, 1j * j3, atol=1e-12)
    casimir = j1 @ j1 + j2 @ j2 + j3 @ j3
    np.testing.assert_allclose(
        casimir, spin.j * (spin.j + 1) * np.eye(spin.hilbert_dim), atol=1e-12
    )
    np.testing.assert_allclose(np.diag(j3).real, spin.j - np.arange(two_j + 1))


def test_spin_label():
    assert SpinLabel.from_hilbert_dim(4).j == 1.5
    with pytest.raises(ValidationError):
        SpinLabel(0)
    with pytest.raises(ValidationError):
        fuzzy_sphere(SpinLabel(1), alpha=-1.0)


@pytest.mark.parametrize('n', [2, 3, 4])
def test_gell_mann_normalization(n):
    matrices = gell_mann_matrices(n)
    assert len(matrices) == n * n - 1
    gram = np.einsum('aij,bji->ab', matrices, matrices)
    np.testing.assert_allclose(gram, 2 * np.eye(n * n - 1), atol=1e-12)
    np.testing.assert_allclose(np.trace(matrices, axis1=1, axis2=2), 0, atol=1e-12)


def test_fuzzy_cpn_casimir():
    cfg = fuzzy_cpn(3)
    casimir = np.einsum('aij,ajk->ik', cfg.observables, cfg.observables)
    np.testing.assert_allclose(casimir, 2 * 8 / 3 * np.eye(3), atol=1e-12)


def test_clock_shift_relation():
    u, v = clock_shift(5)
    q = np.exp(2j * np.pi / 5)
    np.testing.assert_allclose(u @ v, q * v @ u, atol=1e-12)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(5), atol=1e-12)


def test_fuzzy_torus_observables():
    cfg = fuzzy_torus(4)
    assert cfg.feature_dim == 4
    x1, x2, x3, x4 = cfg.observables
    np.testing.assert_allclose(x1 @ x1 + x2 @ x2, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(x3 @ x3 + x4 @ x4, np.eye(4), atol=1e-12)


def test_q_number():
    assert q_number(1, 7) == pytest.approx(1.0)
    assert q_number(2, 1e6) == pytest.approx(2.0)


def test_commuting_and_block_sum(spin_half):
    cfg = commuting_config([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    np.testing.assert_allclose(np.diag(cfg.observables[2]).real, [2.0, 5.0])
    total = block_sum(spin_half, cfg)
    assert total.hilbert_dim == 4
    np.testing.assert_allclose(total.observables[:, :2, 2:], 0)
    with pytest.raises(ValidationError):
        block_sum(spin_half, fuzzy_torus(2))


def test_reference_configuration():
    sphere = reference_configuration('fuzzy_sphere', two_j=2, alpha=0.5)
    np.testing.assert_allclose(
        sphere.observables, 0.5 * angular_momentum(SpinLabel(2)), atol=1e-15
    )
    assert reference_configuration('fuzzy_torus', size=3).feature_dim == 4
    with pytest.raises(ValidationError):
        reference_configuration('fuzzy_cpn')
    with pytest.raises(ValidationError):
        reference_configuration('fuzzy_klein_bottle', size=3)
