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
Synthetic point clouds, CSV ingestion and standard scaling.

Every generator is a pure function of its parameters and seed and records
both in the provenance of the returned dataset.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
import structlog

from .exceptions import ValidationError
from .helper.file_parser.dataset_parsers import parse_numeric_csv, parse_wbc
from .helper.utilities import write_frame, write_json
from .linalg import inverse_sqrt

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    rows: np.ndarray
    feature_names: tuple | None = None
    provenance: dict = field(default_factory=dict)
    labels: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValidationError(f'a dataset needs a T x D array, got {rows.shape}')
        if not np.all(np.isfinite(rows)):
            raise ValidationError('datasets must not contain NaN or Inf')
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != rows.shape[1]:
                raise ValidationError('one feature name per column is required')
            object.__setattr__(self, 'feature_names', names)
        rows.setflags(write=False)
        object.__setattr__(self, 'rows', rows)

    @property
    def n_points(self):
        return self.rows.shape[0]

    @property
    def feature_dim(self):
        return self.rows.shape[1]

    def __len__(self):
        return self.n_points


def _provenance(generator, seed, **parameters):
    return {'generator': generator, 'seed': seed, 'parameters': parameters}


def _unit_vectors(rng, n, dim):
    g = rng.standard_normal((n, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_uniform(n, radius=1.0, center=(0.0, 0.0, 0.0), noise_sigma=0.0, seed=0):
    if n < 1:
        raise ValidationError('n must be at least 1')
    if radius <= 0:
        raise ValidationError('radius must be positive')
    rng = np.random.default_rng(seed)
    rows = np.asarray(center, dtype=np.float64) + radius * _unit_vectors(rng, n, 3)
    rows = rows + noise_sigma * rng.standard_normal(rows.shape)
    return Dataset(
        rows,
        provenance=_provenance(
            'sphere_uniform',
            seed,
            n=n,
            radius=radius,
            center=list(center),
            noise_sigma=noise_sigma,
        ),
    )


def two_spheres(
    n,
    centers=((0.0, 0.0, 0.0), (0.0, 0.0, 3.0)),
    radii=(1.5, 1.0),
    noise_sigma=0.1,
    seed=0,
    area_weighted=False,
):
    """
    Two noisy spheres; ``labels`` tells which sphere each row was drawn from.
    Points are split evenly unless ``area_weighted`` is set.
    """
    if n < 2:
        raise ValidationError('two spheres need at least two points')
    if min(radii) <= 0:
        raise ValidationError('radii must be positive')
    if area_weighted:
        first = int(round(n * radii[0] ** 2 / (radii[0] ** 2 + radii[1] ** 2)))
        first = min(max(first, 1), n - 1)
    else:
        first = n // 2
    counts = (first, n - first)
    rng = np.random.default_rng(seed)
    rows = np.concatenate(
        [
            np.asarray(c, dtype=np.float64) + r * _unit_vectors(rng, k, 3)
            for c, r, k in zip(centers, radii, counts)
        ]
    )
    rows = rows + noise_sigma * rng.standard_normal(rows.shape)
    labels = np.repeat([0, 1], counts)
    return Dataset(
        rows,
        labels=labels,
        provenance=_provenance(
            'two_spheres',
            seed,
            n=n,
            centers=[list(c) for c in centers],
            radii=list(radii),
            noise_sigma=noise_sigma,
            area_weighted=area_weighted,
            labels=labels.tolist(),
        ),
    )


def sphere_nonuniform(n, noise_sigma=0.0, seed=0):
    """Unit sphere with density proportional to ``(1 + cos theta)^2``."""
    if n < 1:
        raise ValidationError('n must be at least 1')
    rng = np.random.default_rng(seed)
    accepted = []
    remaining = n
    while remaining > 0:
        # cos(theta) uniform is the area measure; accept with (1 + u)^2 / 4
        u = rng.uniform(-1.0, 1.0, 4 * remaining + 16)
        keep = u[rng.random(u.size) < (1.0 + u) ** 2 / 4.0][:remaining]
        accepted.append(keep)
        remaining -= keep.size
    cos_theta = np.concatenate(accepted)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    sin_theta = np.sqrt(1.0 - cos_theta**2)
    rows = np.stack(
        [sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta], axis=1
    )
    rows = rows + noise_sigma * rng.standard_normal(rows.shape)
    return Dataset(
        rows,
        provenance=_provenance('sphere_nonuniform', seed, n=n, noise_sigma=noise_sigma),
    )


def mobius(z, a, theta=0.0):
    """Disk automorphism ``e^(i theta) (a - z) / (1 - conj(a) z)``."""
    z = np.asarray(z, dtype=np.complex128)
    return np.exp(1j * theta) * (a - z) / (1.0 - np.conj(a) * z)


def _disk_points(rng, n, radius=1.0):
    r = radius * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


def _interleave(values):
    """``(T, K)`` complex to ``(T, 2K)`` real as ``re_1, im_1, re_2, ...``."""
    return np.stack([values.real, values.imag], axis=-1).reshape(len(values), -1)


def _thetas(rng, n_maps, theta, random_theta):
    if random_theta:
        return rng.uniform(-np.pi, np.pi, n_maps)
    return np.full(n_maps, float(theta))


def conformal_maps(
    n_maps=2000, n_ref=100, a_max=0.9, theta=0.0, seed=0, random_theta=False
):
    """
    Images of ``n_ref`` fixed reference points of the unit disk under
    ``n_maps`` random disk automorphisms, one map per row.
    """
    if not 0 <= a_max < 1:
        raise ValidationError('a_max must lie in [0, 1)')
    if n_maps < 1 or n_ref < 1:
        raise ValidationError('n_maps and n_ref must be positive')
    rng = np.random.default_rng(seed)
    reference = _disk_points(rng, n_ref)
    a = _disk_points(rng, n_maps, a_max)
    thetas = _thetas(rng, n_maps, theta, random_theta)
    images = mobius(reference[None, :], a[:, None], thetas[:, None])
    return Dataset(
        _interleave(images),
        provenance=_provenance(
            'conformal_maps',
            seed,
            n_maps=n_maps,
            n_ref=n_ref,
            a_max=a_max,
            theta=theta,
            random_theta=random_theta,
        ),
        extras={'a': a[:, None], 'theta': thetas, 'reference_points': reference},
    )


def blaschke_potapov_factor(z, a, theta=0.0):
    """
    Automorphism of the complex unit ball,
    ``e^(i theta) sqrt(1 - |a|^2) (1 - a a^dagger)^(-1/2) (a - z) / (1 - <a|z>)``.

    ``z`` holds points of C^n along its last axis.
    """
    a = np.atleast_1d(np.asarray(a, dtype=np.complex128))
    z = np.asarray(z, dtype=np.complex128)
    norm_sq = float(np.vdot(a, a).real)
    if norm_sq >= 1.0:
        raise ValidationError(f'|a| must be below 1, got {np.sqrt(norm_sq)}')
    if z.shape[-1] != a.size:
        raise ValidationError('z and a must have the same complex dimension')
    transform = inverse_sqrt(np.eye(a.size) - np.outer(a, a.conj()))
    numerator = (a - z) @ transform.T
    denominator = 1.0 - z @ a.conj()
    return (
        np.exp(1j * np.asarray(theta))[..., None]
        * np.sqrt(1.0 - norm_sq)
        * numerator
        / denominator[..., None]
    )


def _ball_points(rng, n, dim, radius=1.0):
    g = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    directions = g / np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / (2 * dim))
    return r[:, None] * directions


def blaschke_potapov(
    n_maps=2000, n_ref=100, ball_dim=2, a_max=0.9, seed=0, theta=0.0, random_theta=False
):
    """Images of reference points of the unit ball in C^n under random factors."""
    if not 2 <= ball_dim <= 5:
        raise ValidationError('ball_dim must lie in [2, 5]')
    if not 0 <= a_max < 1:
        raise ValidationError('a_max must lie in [0, 1)')
    if n_maps < 1 or n_ref < 1:
        raise ValidationError('n_maps and n_ref must be positive')
    rng = np.random.default_rng(seed)
    reference = _ball_points(rng, n_ref, ball_dim)
    a = _ball_points(rng, n_maps, ball_dim, a_max)
    thetas = _thetas(rng, n_maps, theta, random_theta)
    images = np.stack(
        [blaschke_potapov_factor(reference, a[t], thetas[t]) for t in range(n_maps)]
    )
    return Dataset(
        _interleave(images.reshape(n_maps, -1)),
        provenance=_provenance(
            'blaschke_potapov',
            seed,
            n_maps=n_maps,
            n_ref=n_ref,
            ball_dim=ball_dim,
            a_max=a_max,
            theta=theta,
            random_theta=random_theta,
        ),
        extras={'a': a, 'theta': thetas, 'reference_points': reference},
    )


def standard_scale(ds):
    """
    Zero mean and unit variance per column. Constant columns become zeros.
    Returns the scaled dataset with the per-feature mean and std.
    """
    rows = ds.rows
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    constant = std == 0
    for column in np.flatnonzero(constant):
        logger.warning('constant feature mapped to zero', column=int(column))
    scaled = (rows - mean) / np.where(constant, 1.0, std)
    scaled[:, constant] = 0.0
    provenance = dict(ds.provenance)
    provenance['standard_scale'] = {'mean': mean.tolist(), 'std': std.tolist()}
    return replace(ds, rows=scaled, provenance=provenance), mean, std


def inverse_standard_scale(rows, mean, std):
    std = np.asarray(std, dtype=np.float64)
    return np.asarray(rows) * np.where(std == 0, 1.0, std) + mean


def load_csv(path, has_header=False):
    rows, names = parse_numeric_csv(path, has_header)
    return Dataset(
        rows,
        feature_names=names,
        provenance=_provenance('load_csv', None, path=str(path), has_header=has_header),
    )


def load_wbc(path, has_header=False):
    rows, names, labels = parse_wbc(path, has_header)
    return Dataset(
        rows,
        feature_names=names,
        labels=labels,
        provenance=_provenance('load_wbc', None, path=str(path), has_header=has_header),
    )


def save_csv(ds, path):
    """
    Headerless CSV of the rows plus ``<path>.provenance.json``. Datasets of
    maps also get ``<stem>.params.csv`` with the map parameters.
    """
    path = Path(path)
    write_frame(path, pd.DataFrame(ds.rows), header=False)
    written = [path]
    if 'a' in ds.extras:
        a = np.asarray(ds.extras['a'])
        params = pd.DataFrame(_interleave(a))
        params.columns = [
            f'{part}_{k}' for k in range(a.shape[1]) for part in ('re', 'im')
        ]
        params['theta'] = ds.extras['theta']
        params_path = path.with_name(f'{path.stem}.params.csv')
        write_frame(params_path, params)
        written.append(params_path)
    sidecar = Path(f'{path}.provenance.json')
    write_json(sidecar, ds.provenance)
    written.append(sidecar)
    return written
