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
Closed-form matrix configurations: fuzzy sphere, minimal fuzzy CP^(N-1),
fuzzy torus and commuting (classical point) configurations.
"""

from dataclasses import dataclass

import numpy as np

from .configuration import MatrixConfiguration
from .exceptions import ValidationError


@dataclass(frozen=True)
class SpinLabel:
    two_j: int

    def __post_init__(self):
        if int(self.two_j) != self.two_j or self.two_j < 1:
            raise ValidationError('two_j must be a positive integer')

    @property
    def j(self):
        return self.two_j / 2

    @property
    def hilbert_dim(self):
        return self.two_j + 1

    @classmethod
    def from_hilbert_dim(cls, n):
        return cls(n - 1)


def angular_momentum(spin):
    """
    Spin-j generators ``J_1, J_2, J_3`` in the basis ``m = j, j-1, ..., -j``.
    """
    j = spin.j
    m = j - np.arange(spin.hilbert_dim)
    raising = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(
        np.complex128
    )
    lowering = raising.conj().T
    j1 = 0.5 * (raising + lowering)
    j2 = -0.5j * (raising - lowering)
    j3 = np.diag(m).astype(np.complex128)
    return np.stack([j1, j2, j3])


def fuzzy_sphere(spin, alpha=1.0):
    if alpha <= 0:
        raise ValidationError('alpha must be positive')
    return MatrixConfiguration(alpha * angular_momentum(spin))


def optimal_sphere_scale(spin, fluctuation_weight):
    """Loss-minimising scale of ``alpha * J`` for data on the unit sphere."""
    return 1.0 / (spin.j + fluctuation_weight)


def gell_mann_matrices(n):
    """
    Generalized Gell-Mann matrices with ``Tr(l_a l_b) = 2 delta_ab``.

    Ordered as symmetric pairs, antisymmetric pairs, then diagonal matrices,
    pairs lexicographic in (row, col).
    """
    if n < 2:
        raise ValidationError('Gell-Mann matrices need N >= 2')
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    symmetric, antisymmetric, diagonal = [], [], []
    for j, k in pairs:
        s = np.zeros((n, n), dtype=np.complex128)
        s[j, k] = s[k, j] = 1
        symmetric.append(s)
        a = np.zeros((n, n), dtype=np.complex128)
        a[j, k] = -1j
        a[k, j] = 1j
        antisymmetric.append(a)
    for level in range(1, n):
        d = np.zeros(n)
        d[:level] = 1
        d[level] = -level
        diagonal.append(np.diag(np.sqrt(2 / (level * (level + 1))) * d + 0j))
    return np.stack(symmetric + antisymmetric + diagonal)


def fuzzy_cpn(n):
    return MatrixConfiguration(gell_mann_matrices(n))


def clock_shift(n):
    if n < 2:
        raise ValidationError('clock and shift operators need N >= 2')
    q = np.exp(2j * np.pi / n)
    clock = np.diag(q ** np.arange(n))
    shift = np.roll(np.eye(n, dtype=np.complex128), 1, axis=0)
    return clock, shift


def fuzzy_torus(n):
    """Four observables with ``X_1 + i X_2 = U`` and ``X_3 + i X_4 = V``."""
    u, v = clock_shift(n)
    observables = []
    for w in (u, v):
        observables.append(0.5 * (w + w.conj().T))
        observables.append(-0.5j * (w - w.conj().T))
    return MatrixConfiguration(np.stack(observables))


def q_number(k, n):
    return np.sin(k * np.pi / n) / np.sin(np.pi / n)


def commuting_config(points):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.size == 0:
        raise ValidationError('a commuting configuration needs at least one point')
    return MatrixConfiguration(
        np.stack([np.diag(points[:, a]) + 0j for a in range(points.shape[1])])
    )


def block_sum(*configs):
    """Direct sum of configurations with equal feature dimension."""
    feature_dims = {cfg.feature_dim for cfg in configs}
    if len(feature_dims) != 1:
        raise ValidationError('direct sums need equal feature dimensions')
    n = sum(cfg.hilbert_dim for cfg in configs)
    observables = np.zeros((feature_dims.pop(), n, n), dtype=np.complex128)
    offset = 0
    for cfg in configs:
        size = cfg.hilbert_dim
        observables[:, offset : offset + size, offset : offset + size] = cfg.observables
        offset += size
    return MatrixConfiguration(observables)


REFERENCE_GEOMETRIES = ('fuzzy_sphere', 'fuzzy_cpn', 'fuzzy_torus')


def reference_configuration(name, two_j=None, alpha=1.0, size=None):
    """One of the named closed-form geometries."""
    if name == 'fuzzy_sphere':
        if two_j is None:
            raise ValidationError('a fuzzy sphere needs two_j')
        return fuzzy_sphere(SpinLabel(int(two_j)), 1.0 if alpha is None else alpha)
    if name not in REFERENCE_GEOMETRIES:
        raise ValidationError(f'unknown reference geometry {name!r}')
    if size is None:
        raise ValidationError(f'{name} needs the matrix size')
    return fuzzy_cpn(int(size)) if name == 'fuzzy_cpn' else fuzzy_torus(int(size))
