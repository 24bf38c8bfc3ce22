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
Dense complex Hermitian linear algebra shared by all other modules.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. A matrix counts as
Hermitian if every entry agrees with the conjugate of its transpose partner
within ``HERMITICITY_TOL`` (absolute).
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ValidationError

HERMITICITY_TOL = 1e-12


def as_hermitian(h, name='matrix'):
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ValidationError(f'{name} must be a non-empty square matrix')
    defect = np.max(np.abs(h - h.conj().T))
    if defect > HERMITICITY_TOL:
        raise ValidationError(f'{name} is not Hermitian (defect {defect:.3e})')
    return h


def _check_same_dim(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(
            f'matrices must be square with equal dims, got {a.shape} and {b.shape}'
        )
    return a, b


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.eigenvalues.shape[-1]

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def fix_phase(vectors):
    """
    Makes the largest-magnitude component of every column real positive.

    Works on a single ``(N, K)`` matrix of column vectors or on a stack of them.
    """
    vectors = np.array(vectors, dtype=np.complex128)
    pivot = np.argmax(np.abs(vectors), axis=-2)
    lead = np.take_along_axis(vectors, pivot[..., None, :], axis=-2)
    phase = lead / np.abs(lead)
    return vectors * phase.conj()


def hermitian_eig(h):
    h = as_hermitian(h)
    eigenvalues, eigenvectors = scipy.linalg.eigh(h)
    return EigenDecomposition(eigenvalues, fix_phase(eigenvectors))


def eigh_stack(hs):
    """Batched ``hermitian_eig`` for an array of shape ``(..., N, N)``."""
    eigenvalues, eigenvectors = np.linalg.eigh(hs)
    return EigenDecomposition(eigenvalues, fix_phase(eigenvectors))


def frobenius_inner(a, b):
    a, b = _check_same_dim(a, b)
    return np.vdot(a, b)


def frobenius_norm(a):
    return float(np.linalg.norm(np.asarray(a)))


def commutator(a, b):
    a, b = _check_same_dim(a, b)
    return a @ b - b @ a


def hermitian_part(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


def random_hermitian(n, rng, scale=1.0):
    """GUE-style Hermitian matrix with i.i.d. Gaussian entries."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * hermitian_part(g) / np.sqrt(2.0)


def inverse_sqrt(h):
    decomposition = hermitian_eig(h)
    if np.any(decomposition.eigenvalues <= 0):
        raise ValidationError('inverse square root needs a positive definite matrix')
    v = decomposition.eigenvectors
    return (v / np.sqrt(decomposition.eigenvalues)) @ v.conj().T
