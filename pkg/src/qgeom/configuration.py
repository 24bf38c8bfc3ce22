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

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .linalg import HERMITICITY_TOL


@dataclass(frozen=True, eq=False)
class MatrixConfiguration:
    """
    The learned observables ``X_1 ... X_D``: D Hermitian N x N matrices.

    ``observables`` is stored as a read-only complex array of shape ``(D, N, N)``.
    """

    observables: np.ndarray

    def __post_init__(self):
        x = np.array(self.observables, dtype=np.complex128)
        if x.ndim != 3 or x.shape[1] != x.shape[2]:
            raise ValidationError(
                f'observables must have shape (D, N, N), got {x.shape}'
            )
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValidationError('a configuration needs D >= 1 and N >= 1')
        defect = np.max(np.abs(x - np.swapaxes(x, 1, 2).conj()))
        if defect > HERMITICITY_TOL:
            raise ValidationError(
                f'observables are not Hermitian (defect {defect:.3e})'
            )
        x.setflags(write=False)
        object.__setattr__(self, 'observables', x)

    @classmethod
    def from_matrices(cls, matrices):
        return cls(np.stack([np.asarray(m, dtype=np.complex128) for m in matrices]))

    @property
    def hilbert_dim(self):
        return self.observables.shape[1]

    @property
    def feature_dim(self):
        return self.observables.shape[0]

    def __len__(self):
        return self.feature_dim

    def __getitem__(self, a):
        return self.observables[a]

    def shifted(self, shift):
        """Returns the configuration ``X_a + c_a * 1``."""
        shift = np.asarray(shift, dtype=np.float64)
        if shift.shape != (self.feature_dim,):
            raise ValidationError('shift must have one entry per feature')
        identity = np.eye(self.hilbert_dim)
        return MatrixConfiguration(self.observables + shift[:, None, None] * identity)

    def to_dict(self):
        return {
            'hilbert_dim': self.hilbert_dim,
            'feature_dim': self.feature_dim,
            'observables': [
                [[[float(z.real), float(z.imag)] for z in row] for row in matrix]
                for matrix in self.observables
            ],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            values = np.asarray(data['observables'], dtype=np.float64)
            hilbert_dim = int(data['hilbert_dim'])
            feature_dim = int(data['feature_dim'])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f'malformed matrix configuration: {e}') from e
        expected = (feature_dim, hilbert_dim, hilbert_dim, 2)
        if values.shape != expected:
            raise ValidationError(
                f'observables have shape {values.shape}, expected {expected}'
            )
        return cls(values[..., 0] + 1j * values[..., 1])

    def to_json(self):
        # json writes floats with repr, which round-trips every float64 exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f'configuration is not valid JSON: {e}') from e
        return cls.from_dict(data)

    def save(self, path):
        from .helper.utilities import atomic_write_text

        atomic_write_text(path, self.to_json())

    @classmethod
    def load(cls, path):
        try:
            with open(path) as f:
                return cls.from_json(f.read())
        except FileNotFoundError as e:
            raise ValidationError(f'configuration file {path} does not exist') from e
