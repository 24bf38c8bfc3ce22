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


class QGeomError(Exception):
    """Base class of all errors raised by qgeom."""


class ValidationError(QGeomError, ValueError):
    """Input does not satisfy the preconditions of an operation."""


class DatasetParseError(ValidationError):
    def __init__(self, message, row=None, column=None):
        if row is not None:
            message = f'{message} (row {row}, column {column})'
        super().__init__(message)
        self.row = row
        self.column = column


class NumericalError(QGeomError, ArithmeticError):
    """A computation could not produce a trustworthy result."""


class DegenerateStateError(NumericalError):
    def __init__(self, gap, point=None, index=None):
        message = f'ground state is degenerate (gap={gap:.3e})'
        if index is not None:
            message += f' at point index {index}'
        super().__init__(message)
        self.gap = gap
        self.point = point
        self.index = index


class DegenerateOnSphereError(DegenerateStateError):
    pass


class NonProjectorError(NumericalError):
    def __init__(self, defect):
        super().__init__(
            f'zero modes are not of projector type (idempotency defect {defect:.3e})'
        )
        self.defect = defect


class FitError(NumericalError):
    pass


class GridTooCoarseError(NumericalError):
    def __init__(self, residual):
        super().__init__(
            f'berry flux is {residual:.3f} away from an integer, refine the grid'
        )
        self.residual = residual


class TrainingDivergedError(NumericalError):
    def __init__(self, epoch, loss):
        super().__init__(f'loss became {loss} in epoch {epoch}')
        self.epoch = epoch
        self.loss = loss
