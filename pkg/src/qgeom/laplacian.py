#
# Copyright The NOMAD Authors.
#
# This file is part of NOMAD. See https://nomad-lab.eu for further info.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""
The matrix Laplacian ``Delta(Y) = sum_a [X_a, [X_a, Y]]`` and what is derived
from its spectrum: Hermitian eigenmaps, zero-mode projectors, a Weyl-law
dimension fit, smoothed observables and a few diagnostics of the
configuration.

Matrices are vectorized row-major, so ``vec(A Y B) = kron(A, B^T) vec(Y)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import structlog
from scipy import stats
from scipy.special import entr

from .configuration import MatrixConfiguration
from .exceptions import FitError, NonProjectorError, ValidationError
from .linalg import as_hermitian, commutator, frobenius_norm

logger = structlog.get_logger(__name__)

CLUSTER_RTOL = 1e-8
IDEMPOTENCY_TOL = 1e-4
WEYL_MIN_EIGENVALUES = 10
CLASSICAL_RATIO = 1e-6
DEEP_QUANTUM_RATIO = 1.0


def matrix_laplacian(cfg):
    n = cfg.hilbert_dim
    identity = np.eye(n)
    laplacian = np.zeros((n * n, n * n), dtype=np.complex128)
    for x in cfg.observables:
        adjoint = np.kron(x, identity) - np.kron(identity, x.T)
        laplacian += adjoint @ adjoint
    return laplacian


def _clusters(eigenvalues, rtol=CLUSTER_RTOL):
    """Index ranges of runs of ascending ``eigenvalues`` closer than the tolerance."""
    tol = rtol * max(1.0, float(np.max(np.abs(eigenvalues))))
    breaks = np.flatnonzero(np.diff(eigenvalues) > tol) + 1
    edges = np.concatenate([[0], breaks, [len(eigenvalues)]])
    return [range(start, stop) for start, stop in zip(edges[:-1], edges[1:])]


def _as_real_rows(matrices):
    flat = matrices.reshape(len(matrices), -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def _from_real_rows(rows, n):
    half = n * n
    return (rows[:, :half] + 1j * rows[:, half:]).reshape(-1, n, n)


def _hermitian_basis(vectors, n, leading=None):
    """
    Orthonormal Hermitian basis of the span of the eigenvector columns.

    The span of an eigenspace of ``Delta`` is closed under ``Y -> Y^dagger``,
    so the Hermitian and anti-Hermitian parts of its members span it over the
    reals. ``leading`` is an optional unit Hermitian matrix in the span that is
    kept as the first basis element.
    """
    m = vectors.shape[1]
    matrices = vectors.T.reshape(m, n, n)
    adjoints = np.swapaxes(matrices, 1, 2).conj()
    parts = np.concatenate([0.5 * (matrices + adjoints), -0.5j * (matrices - adjoints)])
    rows = _as_real_rows(parts)
    fixed = []
    if leading is not None:
        lead = _as_real_rows(leading[None])[0]
        rows = rows - np.outer(rows @ lead, lead)
        fixed.append(lead)
        m -= 1
    _, _, vt = np.linalg.svd(rows, full_matrices=False)
    basis = vt[:m]
    pivot = np.argmax(np.abs(basis), axis=1)
    basis = basis * np.sign(basis[np.arange(m), pivot])[:, None]
    if fixed:
        basis = np.concatenate([np.stack(fixed), basis])
    return _from_real_rows(basis, n)


@dataclass(frozen=True, eq=False)
class LaplacianAnalysis:
    """
    Spectrum of the matrix Laplacian with orthonormal Hermitian eigenmaps.

    ``eigenmaps[0]`` is ``1/sqrt(N)``.
    """

    eigenvalues: np.ndarray
    eigenmaps: np.ndarray

    @property
    def hilbert_dim(self):
        return self.eigenmaps.shape[1]

    @property
    def scale(self):
        return max(1.0, float(np.max(np.abs(self.eigenvalues))))

    def default_zero_tolerance(self):
        return 1e-3 * float(np.median(self.eigenvalues))

    def zero_mode_count(self, tol_zero=None):
        if tol_zero is None:
            tol_zero = self.default_zero_tolerance()
        return int(np.count_nonzero(self.eigenvalues <= tol_zero))

    def eigenmap_configuration(self, modes=None):
        """The eigenmaps as a configuration, one observable per mode."""
        maps = self.eigenmaps if modes is None else self.eigenmaps[list(modes)]
        return MatrixConfiguration(maps)


def laplacian_spectrum(cfg):
    n = cfg.hilbert_dim
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix_laplacian(cfg))
    identity = np.eye(n, dtype=np.complex128) / np.sqrt(n)
    eigenmaps = []
    for i, cluster in enumerate(_clusters(eigenvalues)):
        vectors = eigenvectors[:, cluster.start : cluster.stop]
        leading = identity if i == 0 else None
        eigenmaps.append(_hermitian_basis(vectors, n, leading=leading))
    return LaplacianAnalysis(eigenvalues, np.concatenate(eigenmaps))


@dataclass(frozen=True, eq=False)
class ComponentDecomposition:
    projectors: np.ndarray
    residual: float
    idempotency_defect: float

    def __len__(self):
        return len(self.projectors)

    @property
    def ranks(self):
        return [int(round(np.trace(p).real)) for p in self.projectors]


def zero_mode_components(analysis, tol_zero=None, seed=0):
    """
    Splits the zero modes of the Laplacian into orthogonal projectors.

    A random Hermitian combination of the zero modes is diagonalized and its
    eigenvectors grouped by the ``k - 1`` largest spectral gaps, ``k`` being
    the number of zero modes. Each group is projected back onto the zero-mode
    span; if the result is not idempotent the zero modes do not form a
    commutative algebra of projectors.
    """
    if tol_zero is None:
        tol_zero = analysis.default_zero_tolerance()
    zero_modes = analysis.eigenmaps[analysis.eigenvalues <= tol_zero]
    k = len(zero_modes)
    n = analysis.hilbert_dim
    if k <= 1:
        return ComponentDecomposition(np.eye(n, dtype=np.complex128)[None], 0.0, 0.0)

    if k > n:
        # a commutative algebra of N x N matrices has dimension at most N
        raise NonProjectorError(float('inf'))

    rng = np.random.default_rng(seed)
    combination = np.einsum('i,ijk->jk', rng.standard_normal(k), zero_modes)
    values, vectors = np.linalg.eigh(0.5 * (combination + combination.conj().T))
    cuts = np.sort(np.argsort(np.diff(values))[-(k - 1) :]) + 1
    groups = np.split(np.arange(n), cuts)

    projectors = []
    for group in groups:
        v = vectors[:, group]
        p = v @ v.conj().T
        coefficients = np.einsum('ijk,jk->i', zero_modes.conj(), p).real
        projectors.append(np.einsum('i,ijk->jk', coefficients, zero_modes))
    projectors = np.stack(projectors)

    defect = max(frobenius_norm(p @ p - p) for p in projectors)
    if defect > IDEMPOTENCY_TOL:
        raise NonProjectorError(defect)
    residual = frobenius_norm(projectors.sum(axis=0) - np.eye(n))
    logger.debug('zero mode components', count=k, residual=residual, defect=defect)
    return ComponentDecomposition(projectors, residual, defect)


def counting_function(analysis, tol_zero=None):
    """
    Distinct nonzero eigenvalue levels and the number of nonzero eigenvalues
    up to and including each level.
    """
    if tol_zero is None:
        tol_zero = analysis.default_zero_tolerance()
    nonzero = analysis.eigenvalues[analysis.eigenvalues > tol_zero]
    if len(nonzero) == 0:
        return np.zeros(0), np.zeros(0, dtype=int)
    clusters = _clusters(nonzero)
    levels = np.array([nonzero[c.start : c.stop].mean() for c in clusters])
    counts = np.array([c.stop for c in clusters])
    return levels, counts


def weyl_dimension(analysis, fit_window=None, tol_zero=None):
    """
    Intrinsic dimension from Weyl's law ``N(lambda) ~ lambda^(d/2)``.

    ``fit_window`` is an eigenvalue interval ``(low, high)``. By default it
    covers the nonzero eigenvalues up to their 75% quantile, leaving out the
    UV end of the spectrum.
    """
    if tol_zero is None:
        tol_zero = analysis.default_zero_tolerance()
    levels, counts = counting_function(analysis, tol_zero)
    if len(levels) == 0:
        raise FitError('the spectrum has no nonzero eigenvalues')
    nonzero = analysis.eigenvalues[analysis.eigenvalues > tol_zero]
    if fit_window is None:
        fit_window = (float(nonzero[0]), float(np.quantile(nonzero, 0.75)))
    low, high = fit_window
    inside = np.count_nonzero((nonzero >= low) & (nonzero <= high))
    if inside < WEYL_MIN_EIGENVALUES:
        raise FitError(
            f'{inside} eigenvalues in the fit window, need {WEYL_MIN_EIGENVALUES}'
        )
    mask = (levels >= low) & (levels <= high)
    if np.count_nonzero(mask) < 2:
        raise FitError('the fit window holds a single eigenvalue level')
    fit = stats.linregress(np.log(levels[mask]), np.log(counts[mask]))
    return 2.0 * fit.slope


def eigenmap_overlap(analysis, cfg):
    """``b[a, i] = Tr(Y_i X_a)``."""
    if cfg.hilbert_dim != analysis.hilbert_dim:
        raise ValidationError('configuration and analysis differ in N')
    return np.einsum('ijk,akj->ai', analysis.eigenmaps, cfg.observables).real


def _check_mode_count(analysis, n, lower):
    if not lower <= n <= len(analysis.eigenvalues):
        raise ValidationError(
            f'mode count must lie in [{lower}, {len(analysis.eigenvalues)}], got {n}'
        )


def project_observables(cfg, analysis, n):
    """Projection of every ``X_a`` onto the span of the ``n`` lowest eigenmaps."""
    _check_mode_count(analysis, n, 1)
    overlap = eigenmap_overlap(analysis, cfg)
    return MatrixConfiguration(
        np.einsum('ai,ijk->ajk', overlap[:, :n], analysis.eigenmaps[:n])
    )


def reduced_laplacian(analysis, n):
    """Laplacian of the reduced configuration ``{Y_1, ..., Y_n}``."""
    if not 1 <= n <= len(analysis.eigenvalues) - 1:
        raise ValidationError(
            f'reduced mode count must lie in [1, {len(analysis.eigenvalues) - 1}]'
        )
    return matrix_laplacian(MatrixConfiguration(analysis.eigenmaps[1 : n + 1]))


def laplacian_energy(cfg, y):
    y = as_hermitian(y, 'y')
    if y.shape[0] != cfg.hilbert_dim:
        raise ValidationError('y and the configuration differ in N')
    return float(sum(frobenius_norm(commutator(x, y)) ** 2 for x in cfg.observables))


@dataclass(frozen=True)
class Classification:
    tag: str
    ratio: float


def classify_configuration(cfg):
    """
    Ratio ``max_{a<b} ||[X_a, X_b]|| / ||X_a X_b||`` and its regime.

    Pairs with a vanishing product are ignored.
    """
    if cfg.feature_dim < 2:
        raise ValidationError('classification needs at least two observables')
    x = cfg.observables
    ratio = 0.0
    for a in range(cfg.feature_dim):
        for b in range(a + 1, cfg.feature_dim):
            product = frobenius_norm(x[a] @ x[b])
            if product == 0:
                continue
            ratio = max(ratio, frobenius_norm(commutator(x[a], x[b])) / product)
    if ratio <= CLASSICAL_RATIO:
        tag = 'classical'
    elif ratio >= DEEP_QUANTUM_RATIO:
        tag = 'deep-quantum'
    else:
        tag = 'almost-commutative'
    return Classification(tag, ratio)


def observable_entropy(y):
    y = as_hermitian(y, 'y')
    norm = frobenius_norm(y)
    if abs(norm - 1.0) > 1e-8:
        raise ValidationError(f'y must have unit norm, got {norm}')
    weights = np.linalg.eigvalsh(y) ** 2
    return float(np.sum(entr(weights)))


def _state_vectors(states):
    vectors = [getattr(s, 'vector', s) for s in states]
    if not vectors:
        raise ValidationError('at least one state is required')
    return np.stack([np.asarray(v, dtype=np.complex128) for v in vectors])


def nonlocal_correlation(states, y):
    """``Tr(rho Y rho Y)`` for the mixture ``rho`` of the given states."""
    vectors = _state_vectors(states)
    y = as_hermitian(y, 'y')
    rho = np.einsum('ti,tj->ij', vectors, vectors.conj()) / len(vectors)
    return float(np.trace(rho @ y @ rho @ y).real)


def eigenmap_coordinates(analysis, states, modes):
    """Expectation values ``<x|Y_i|x>`` for every state and each mode ``i``."""
    vectors = _state_vectors(states)
    maps = analysis.eigenmaps[list(modes)]
    return np.einsum('ti,mij,tj->tm', vectors.conj(), maps, vectors).real
