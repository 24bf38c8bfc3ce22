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
Quantum geometric tensor, metric spectra, quantum distance, degeneracy points
of the displacement Hamiltonian and their Chern numbers.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import structlog
from scipy import optimize

from .exceptions import (
    DegenerateOnSphereError,
    DegenerateStateError,
    GridTooCoarseError,
    NumericalError,
    ValidationError,
)
from .quasicoherent import SpectrumBatch, degeneracy_threshold, displacement_spectra

logger = structlog.get_logger(__name__)

DEFAULT_GRID = (24, 24)
CHERN_RESIDUAL_TOL = 0.05
GAP_RATIO_THRESHOLD = 5.0
SEARCH_RTOL = 1e-3
DEDUPE_RTOL = 1e-2
SEED_GRID = 8
ORTHOGONALITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuantumGeometricTensor:
    point: np.ndarray
    q: np.ndarray

    @property
    def g(self):
        return 2.0 * self.q.real

    @property
    def omega(self):
        return 2.0 * self.q.imag


def _tensors(batch, observables):
    """
    ``q = W^dagger W`` with ``W[k, mu] = <k|X_mu|0> / (lambda_k - lambda_0)``.

    The sign of ``d_mu H = x_mu - X_mu`` drops out of the product.
    """
    vectors = batch.eigenvectors
    matrix_elements = np.einsum(
        'pik,mij,pj->pkm', vectors.conj(), observables, vectors[:, :, 0]
    )
    gaps = batch.eigenvalues[:, 1:] - batch.eigenvalues[:, :1]
    w = matrix_elements[:, 1:, :] / gaps[:, :, None]
    return np.einsum('pkm,pkn->pmn', w.conj(), w)


def qgt(cfg, x):
    batch = displacement_spectra(cfg, np.asarray(x, dtype=np.float64)[None])
    if batch.degenerate()[0]:
        raise DegenerateStateError(float(batch.gaps[0]), point=batch.points[0])
    return QuantumGeometricTensor(batch.points[0], _tensors(batch, cfg.observables)[0])


def _metric_dimension(eigenvalues, threshold):
    top = eigenvalues[0]
    if top <= 0:
        return 0
    nonzero = eigenvalues > 1e-12 * top
    for i in range(len(eigenvalues) - 1):
        if not nonzero[i + 1]:
            return i + 1
        if eigenvalues[i] / eigenvalues[i + 1] > threshold:
            return i + 1
    return int(np.count_nonzero(nonzero))


@dataclass(frozen=True, eq=False)
class MetricDimension:
    """
    Descending eigenvalues of the quantum metric per point and the dimension
    read off each spectrum. ``estimate`` is the most frequent dimension and
    ``support`` the fraction of points that agree with it.
    """

    points: np.ndarray
    spectra: np.ndarray
    dimensions: np.ndarray
    estimate: int
    support: float
    skipped: list = field(default_factory=list)


def metric_dimension(cfg, points, gap_ratio_threshold=GAP_RATIO_THRESHOLD):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.size == 0:
        raise ValidationError('metric dimension needs at least one point')
    batch = displacement_spectra(cfg, points)
    degenerate = batch.degenerate()
    skipped = [int(i) for i in np.flatnonzero(degenerate)]
    for i in skipped:
        logger.warning('degenerate point skipped', index=i, gap=float(batch.gaps[i]))
    keep = ~degenerate
    if not np.any(keep):
        raise NumericalError('the ground state is degenerate at every point')

    kept = SpectrumBatch(
        batch.points[keep], batch.eigenvalues[keep], batch.eigenvectors[keep]
    )
    metrics = 2.0 * _tensors(kept, cfg.observables).real
    spectra = np.linalg.eigvalsh(metrics)[:, ::-1]
    spectra = np.clip(spectra, 0.0, None)
    dimensions = np.array(
        [_metric_dimension(s, gap_ratio_threshold) for s in spectra], dtype=int
    )
    counts = np.bincount(dimensions)
    estimate = int(np.argmax(counts))
    return MetricDimension(
        points=kept.points,
        spectra=spectra,
        dimensions=dimensions,
        estimate=estimate,
        support=float(counts[estimate] / len(dimensions)),
        skipped=skipped,
    )


def _unit_vector(state):
    vector = np.asarray(getattr(state, 'vector', state), dtype=np.complex128)
    norm = np.linalg.norm(vector)
    if abs(norm - 1.0) > 1e-8:
        raise ValidationError(f'states must be normalized, got norm {norm}')
    return vector


def quantum_distance(s1, s2):
    """
    ``(D, phi)`` with ``<s1|s2> = exp(i phi - D^2)``.

    Orthogonal states give ``(inf, 0.0)``.
    """
    overlap = np.vdot(_unit_vector(s1), _unit_vector(s2))
    magnitude = abs(overlap)
    if magnitude < ORTHOGONALITY_TOL:
        return float('inf'), 0.0
    distance = float(np.sqrt(max(-np.log(min(magnitude, 1.0)), 0.0)))
    phase = float(np.angle(overlap))
    if phase <= -np.pi:
        phase = np.pi
    return distance, phase


@dataclass(frozen=True, eq=False)
class AffineSlice:
    """
    The 3-dimensional slice ``x = origin + y @ frame`` of feature space, with
    ``frame`` holding three orthonormal rows.
    """

    origin: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64)
        frame = np.asarray(self.frame, dtype=np.float64)
        if frame.ndim != 2 or frame.shape[0] != 3 or origin.shape != frame.shape[1:]:
            raise ValidationError('a slice needs an origin in R^D and a 3 x D frame')
        if np.max(np.abs(frame @ frame.T - np.eye(3))) > 1e-10:
            raise ValidationError('slice frame rows must be orthonormal')
        object.__setattr__(self, 'origin', origin)
        object.__setattr__(self, 'frame', frame)

    @property
    def feature_dim(self):
        return self.frame.shape[1]

    def embed(self, y):
        return self.origin + np.asarray(y, dtype=np.float64) @ self.frame


def default_slice(feature_dim):
    if feature_dim < 3:
        raise ValidationError('a 3-dimensional slice needs D >= 3')
    return AffineSlice(np.zeros(feature_dim), np.eye(3, feature_dim))


def _resolve_slice(cfg, affine_slice):
    affine_slice = affine_slice or default_slice(cfg.feature_dim)
    if affine_slice.feature_dim != cfg.feature_dim:
        raise ValidationError('slice and configuration differ in D')
    return affine_slice


@dataclass(frozen=True, eq=False)
class DegeneracyPoint:
    location: np.ndarray
    gap: float
    charge: int | None = None
    affine_slice: AffineSlice | None = None

    @property
    def feature_point(self):
        return self.affine_slice.embed(self.location)

    def to_dict(self):
        return {
            'location': [float(v) for v in self.location],
            'gap': float(self.gap),
            'charge': self.charge,
        }


def feature_scale(cfg):
    """Largest half spectral width over the observables."""
    eigenvalues = np.linalg.eigvalsh(cfg.observables)
    scale = float(np.max(eigenvalues[:, -1] - eigenvalues[:, 0])) / 2
    return scale if scale > 0 else 1.0


def default_search_box(cfg, affine_slice=None, padding=0.1):
    """Spectral ranges of the slice-projected observables, padded on each side."""
    affine_slice = _resolve_slice(cfg, affine_slice)
    projected = np.einsum('ia,ajk->ijk', affine_slice.frame, cfg.observables)
    offsets = affine_slice.frame @ affine_slice.origin
    eigenvalues = np.linalg.eigvalsh(projected)
    lower = eigenvalues[:, 0] - offsets
    upper = eigenvalues[:, -1] - offsets
    pad = padding * np.maximum(upper - lower, feature_scale(cfg))
    return lower - pad, upper + pad


def _gaps(cfg, affine_slice, ys):
    return displacement_spectra(cfg, affine_slice.embed(np.atleast_2d(ys))).gaps


def find_degeneracy_points(
    cfg, affine_slice=None, search_box=None, n_starts=16, seed=0
):
    """
    Local minima of the gap ``lambda_1 - lambda_0`` inside a 3-dimensional
    slice where the gap closes.

    Starts are the lowest-gap cells of a coarse grid over the box, refined by
    Nelder-Mead. Points within the dedupe radius of a lower-gap point are
    dropped; the result is sorted by location.
    """
    if n_starts < 1:
        raise ValidationError('n_starts must be at least 1')
    affine_slice = _resolve_slice(cfg, affine_slice)
    lower, upper = (
        default_search_box(cfg, affine_slice) if search_box is None else search_box
    )
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    scale = feature_scale(cfg)
    accept_gap = SEARCH_RTOL * scale
    dedupe_radius = DEDUPE_RTOL * scale

    step = (upper - lower) / SEED_GRID
    axes = [lower[i] + (np.arange(SEED_GRID) + 0.5) * step[i] for i in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, 3)
    grid_gaps = _gaps(cfg, affine_slice, grid)
    order = np.argsort(grid_gaps, kind='stable')[:n_starts]
    rng = np.random.default_rng(seed)
    starts = grid[order] + 1e-6 * step * rng.standard_normal((len(order), 3))

    def gap(y):
        return float(_gaps(cfg, affine_slice, y)[0])

    candidates = []
    for start in starts:
        simplex = np.vstack([start, start + np.diag(step)])
        result = optimize.minimize(
            gap,
            start,
            method='Nelder-Mead',
            options={
                'initial_simplex': simplex,
                'xatol': 1e-10 * scale,
                'fatol': 1e-12 * scale,
                'maxiter': 4000,
                'maxfev': 8000,
            },
        )
        if result.fun <= accept_gap:
            candidates.append((float(result.fun), np.asarray(result.x)))

    accepted = []
    for value, location in sorted(candidates, key=lambda c: c[0]):
        if all(np.linalg.norm(location - p.location) > dedupe_radius for p in accepted):
            accepted.append(DegeneracyPoint(location, value, affine_slice=affine_slice))
    accepted.sort(key=lambda p: tuple(p.location))
    logger.info('degeneracy search', starts=len(starts), found=len(accepted))
    return accepted


def _sphere_grid(center, radius, grid):
    n_theta, n_phi = grid
    if n_theta < 2 or n_phi < 3:
        raise ValidationError('the sphere grid needs n_theta >= 2 and n_phi >= 3')
    if radius <= 0:
        raise ValidationError('the sphere radius must be positive')
    theta = np.pi * np.arange(n_theta + 1) / n_theta
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    # one point per pole, shared by all azimuths
    directions = [np.array([[0.0, 0.0, 1.0]])]
    for t in theta[1:-1]:
        ring = [
            np.sin(t) * np.cos(phi),
            np.sin(t) * np.sin(phi),
            np.full(n_phi, np.cos(t)),
        ]
        directions.append(np.stack(ring, axis=1))
    directions.append(np.array([[0.0, 0.0, -1.0]]))
    return np.asarray(center, dtype=np.float64) + radius * np.concatenate(directions)


@dataclass(frozen=True)
class BerryFlux:
    flux: float
    min_gap: float

    @property
    def residual(self):
        return abs(self.flux - round(self.flux))

    def charge(self, tol=CHERN_RESIDUAL_TOL):
        if self.residual > tol:
            raise GridTooCoarseError(self.residual)
        return int(round(self.flux))


def berry_flux(cfg, center, radius, grid=DEFAULT_GRID, affine_slice=None):
    """
    Berry flux of the ground-state bundle through a sphere in the slice, in
    units of ``2 pi``, from plaquette products of link overlaps.

    Plaquettes run ``(i, j) -> (i+1, j) -> (i+1, j+1) -> (i, j+1)`` in
    ``(theta, phi)``, which orients them along the outward normal.
    """
    affine_slice = _resolve_slice(cfg, affine_slice)
    n_theta, n_phi = grid
    ys = _sphere_grid(center, radius, grid)
    batch = displacement_spectra(cfg, affine_slice.embed(ys))
    margins = batch.gaps - degeneracy_threshold(batch.eigenvalues)
    worst = int(np.argmin(margins))
    if margins[worst] <= 0:
        raise DegenerateOnSphereError(
            float(batch.gaps[worst]), point=ys[worst], index=worst
        )

    states = batch.ground_states
    rows = [np.repeat(states[:1], n_phi, axis=0)]
    rows += [states[1 + i * n_phi : 1 + (i + 1) * n_phi] for i in range(n_theta - 1)]
    rows.append(np.repeat(states[-1:], n_phi, axis=0))
    psi = np.stack(rows)
    psi_next_phi = np.roll(psi, -1, axis=1)

    def link(a, b):
        return np.einsum('...i,...i->...', a.conj(), b)

    loops = (
        link(psi[:-1], psi[1:])
        * link(psi[1:], psi_next_phi[1:])
        * link(psi_next_phi[1:], psi_next_phi[:-1])
        * link(psi_next_phi[:-1], psi[:-1])
    )
    flux = float(np.sum(np.angle(loops)) / (2 * np.pi))
    return BerryFlux(flux=flux, min_gap=float(np.min(batch.gaps)))


def chern_number(cfg, center, radius, grid=DEFAULT_GRID, affine_slice=None):
    flux = berry_flux(cfg, center, radius, grid=grid, affine_slice=affine_slice)
    return flux.charge()


def assign_charges(cfg, points, radius=None, grid=DEFAULT_GRID):
    """
    Chern number of each degeneracy point on a sphere small enough to hold no
    other point. Points whose sphere fails to integrate keep ``charge=None``.
    """
    points = list(points)
    if radius is None:
        radius = 0.1 * feature_scale(cfg)
        if len(points) > 1:
            separations = [
                np.linalg.norm(p.location - q.location)
                for i, p in enumerate(points)
                for q in points[i + 1 :]
            ]
            radius = min(radius, 0.25 * min(separations))
    charged = []
    for index, point in enumerate(points):
        try:
            charge = chern_number(
                cfg, point.location, radius, grid=grid, affine_slice=point.affine_slice
            )
        except (DegenerateStateError, GridTooCoarseError) as e:
            logger.warning('charge not assigned', index=index, error=str(e))
            charge = None
        charged.append(replace(point, charge=charge))
    return charged
