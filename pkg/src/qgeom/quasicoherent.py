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
Displacement Hamiltonians, quasi-coherent states and point clouds.

For a configuration ``X`` and a feature-space point ``x`` the displacement
Hamiltonian is ``H(x) = 1/2 sum_a (X_a - x_a)^2``. Its ground state is the
quasi-coherent state ``|x>`` and its ground energy ``lambda(x)`` splits into
``2 lambda = sigma^2 + d^2``, the quantum variance plus the squared displacement
of the expectation values ``<x|X_a|x>`` from ``x``.
"""

from dataclasses import dataclass, field

import numpy as np
import structlog

from .exceptions import DegenerateStateError, ValidationError
from .linalg import eigh_stack

logger = structlog.get_logger(__name__)

DEGENERACY_RTOL = 1e-8


def degeneracy_threshold(eigenvalues, rtol=DEGENERACY_RTOL):
    """Gap below which the ground state counts as degenerate."""
    return rtol * np.maximum(1.0, eigenvalues[..., -1])


def _as_points(cfg, points):
    points = np.asarray(points, dtype=np.float64)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.ndim != 2 or points.shape[1] != cfg.feature_dim:
        raise ValidationError(
            f'points must have {cfg.feature_dim} coordinates, got shape {points.shape}'
        )
    return points, single


def displacement_hamiltonians(cfg, points):
    """``H(x)`` for every row of ``points``, shape ``(T, N, N)``."""
    points, _ = _as_points(cfg, points)
    x = cfg.observables
    square_sum = np.einsum('aij,ajk->ik', x, x)
    linear = np.einsum('ta,aij->tij', points, x)
    shift = np.sum(points**2, axis=1)[:, None, None] * np.eye(cfg.hilbert_dim)
    return 0.5 * (square_sum[None] - 2.0 * linear + shift)


def displacement_hamiltonian(cfg, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.feature_dim,):
        raise ValidationError(
            f'point must have {cfg.feature_dim} coordinates, got shape {x.shape}'
        )
    shifted = cfg.observables - x[:, None, None] * np.eye(cfg.hilbert_dim)
    return 0.5 * np.einsum('aij,ajk->ik', shifted, shifted)


@dataclass(frozen=True, eq=False)
class DisplacementSpectrum:
    point: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap: float
    degenerate: bool

    @property
    def ground_state(self):
        return self.eigenvectors[:, 0]


@dataclass(frozen=True, eq=False)
class QuasiCoherentState:
    vector: np.ndarray
    energy: float
    point: np.ndarray
    spectrum: DisplacementSpectrum | None = None

    def expectation(self, operator):
        return complex(np.vdot(self.vector, operator @ self.vector))


@dataclass(frozen=True, eq=False)
class CloudPoint:
    source: np.ndarray
    image: np.ndarray
    displacement_sq: float
    variance: float
    energy: float


@dataclass(frozen=True, eq=False)
class SpectrumBatch:
    """Eigendecompositions of ``H(x)`` for a batch of points."""

    points: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def gaps(self):
        if self.eigenvalues.shape[1] < 2:
            return np.full(len(self.points), np.inf)
        return self.eigenvalues[:, 1] - self.eigenvalues[:, 0]

    @property
    def ground_states(self):
        return self.eigenvectors[:, :, 0]

    def degenerate(self, rtol=DEGENERACY_RTOL):
        return self.gaps <= degeneracy_threshold(self.eigenvalues, rtol)

    def __len__(self):
        return len(self.points)

    def spectrum(self, i, rtol=DEGENERACY_RTOL):
        return DisplacementSpectrum(
            point=self.points[i],
            eigenvalues=self.eigenvalues[i],
            eigenvectors=self.eigenvectors[i],
            gap=float(self.gaps[i]),
            degenerate=bool(self.degenerate(rtol)[i]),
        )


def displacement_spectra(cfg, points):
    points, _ = _as_points(cfg, points)
    if len(points) == 0:
        n = cfg.hilbert_dim
        return SpectrumBatch(
            points, np.zeros((0, n)), np.zeros((0, n, n), dtype=np.complex128)
        )
    decomposition = eigh_stack(displacement_hamiltonians(cfg, points))
    return SpectrumBatch(points, decomposition.eigenvalues, decomposition.eigenvectors)


def displacement_spectrum(cfg, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.feature_dim,):
        raise ValidationError(
            f'point must have {cfg.feature_dim} coordinates, got shape {x.shape}'
        )
    return displacement_spectra(cfg, x[None]).spectrum(0)


def quasi_coherent_state(cfg, x, with_spectrum=False):
    """
    Ground state of ``H(x)``. A degenerate ground state is not an error here;
    the returned spectrum carries the ``degenerate`` flag.
    """
    spectrum = displacement_spectrum(cfg, x)
    return QuasiCoherentState(
        vector=spectrum.ground_state,
        energy=max(float(spectrum.eigenvalues[0]), 0.0),
        point=spectrum.point,
        spectrum=spectrum if with_spectrum else None,
    )


def quasi_coherent_states(cfg, points):
    """States for many points; degenerate points are kept, see ``degenerate``."""
    batch = displacement_spectra(cfg, points)
    return [
        QuasiCoherentState(
            vector=batch.ground_states[i],
            energy=max(float(batch.eigenvalues[i, 0]), 0.0),
            point=batch.points[i],
        )
        for i in range(len(batch))
    ]


def cloud_quantities(cfg, states, points):
    """
    Expectation values, squared displacements and variances for ground states
    ``states`` (shape ``(T, N)``) at ``points``.
    """
    x = cfg.observables
    projected = np.einsum('aij,tj->tai', x, states)
    images = np.einsum('ti,tai->ta', states.conj(), projected).real
    second_moments = np.einsum('tai,tai->ta', projected.conj(), projected).real
    displacement_sq = np.sum((images - points) ** 2, axis=1)
    variance = np.sum(second_moments - images**2, axis=1)
    return images, displacement_sq, variance


def cloud_point(cfg, x):
    spectrum = displacement_spectrum(cfg, x)
    if spectrum.degenerate:
        raise DegenerateStateError(spectrum.gap, point=spectrum.point)
    images, displacement_sq, variance = cloud_quantities(
        cfg, spectrum.ground_state[None], spectrum.point[None]
    )
    return CloudPoint(
        source=spectrum.point,
        image=images[0],
        displacement_sq=float(displacement_sq[0]),
        variance=float(variance[0]),
        energy=max(float(spectrum.eigenvalues[0]), 0.0),
    )


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    Cloud points of the non-degenerate rows; ``skipped`` holds the row indices
    whose ground state was degenerate.
    """

    points: tuple = ()
    skipped: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def _stack(self, name):
        return np.array([getattr(p, name) for p in self.points], dtype=np.float64)

    @property
    def sources(self):
        return self._stack('source')

    @property
    def images(self):
        return self._stack('image')

    @property
    def displacement_sq(self):
        return self._stack('displacement_sq')

    @property
    def variance(self):
        return self._stack('variance')

    @property
    def energy(self):
        return self._stack('energy')


def qcml_cloud(cfg, dataset):
    rows = np.asarray(getattr(dataset, 'rows', dataset), dtype=np.float64)
    if rows.size == 0:
        rows = rows.reshape(0, cfg.feature_dim)
    rows, _ = _as_points(cfg, rows)
    batch = displacement_spectra(cfg, rows)
    degenerate = batch.degenerate()
    keep = np.flatnonzero(~degenerate)
    skipped = [int(i) for i in np.flatnonzero(degenerate)]
    for i in skipped:
        logger.warning(
            'degenerate ground state skipped', index=i, gap=float(batch.gaps[i])
        )
    images, displacement_sq, variance = cloud_quantities(
        cfg, batch.ground_states[keep], rows[keep]
    )
    energy = np.maximum(batch.eigenvalues[keep, 0], 0.0)
    points = tuple(
        CloudPoint(
            source=rows[i],
            image=images[k],
            displacement_sq=float(displacement_sq[k]),
            variance=float(variance[k]),
            energy=float(energy[k]),
        )
        for k, i in enumerate(keep)
    )
    return PointCloud(points=points, skipped=skipped)


def default_region(data, inflation=0.2):
    """Bounding box of ``data`` whose width is enlarged by ``inflation``."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    lower, upper = data.min(axis=0), data.max(axis=0)
    pad = 0.5 * inflation * (upper - lower)
    return lower - pad, upper + pad


def sample_region(region, n_samples, seed):
    lower, upper = (np.asarray(b, dtype=np.float64) for b in region)
    if lower.shape != upper.shape or np.any(upper < lower):
        raise ValidationError('region must be a (lower, upper) pair of equal shape')
    if n_samples < 0:
        raise ValidationError('n_samples must not be negative')
    rng = np.random.default_rng(seed)
    return lower + (upper - lower) * rng.random((n_samples, lower.size))


def qg_point_cloud(cfg, region, n_samples, seed=0):
    samples = sample_region(region, n_samples, seed)
    if samples.shape[1] != cfg.feature_dim:
        raise ValidationError('region dimension differs from the feature dimension')
    return qcml_cloud(cfg, samples)


def hilbert_dim_estimate(cfg, region=None, n_samples=0):
    """
    ``||1||^2 = Tr 1 = N``.

    Semiclassically ``Tr 1`` is the symplectic volume of the learned manifold in
    units of the quantum cell, so ``N`` counts the cells. ``region`` and
    ``n_samples`` take the same values as for ``qg_point_cloud`` and are ignored.
    """
    return float(np.trace(np.eye(cfg.hilbert_dim)))
