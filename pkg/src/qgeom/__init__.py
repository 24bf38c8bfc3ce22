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
Quantum cognition machine learning.

A point cloud in R^D is encoded by D Hermitian N x N matrices. Every data
point gets a quasi-coherent state, the ground state of its displacement
Hamiltonian, and the configuration is trained so that the expectation values
of those states reproduce the data with small quantum fluctuations. The
learned matrices are then analysed as a quantum geometry.

The NOMAD schema sections live in :mod:`qgeom.data_transformations`.
"""

from .configuration import MatrixConfiguration
from .datasets import Dataset
from .exceptions import (
    DatasetParseError,
    DegenerateOnSphereError,
    DegenerateStateError,
    FitError,
    GridTooCoarseError,
    NonProjectorError,
    NumericalError,
    QGeomError,
    TrainingDivergedError,
    ValidationError,
)
from .helper.utilities import tool_version
from .laplacian import (
    LaplacianAnalysis,
    classify_configuration,
    laplacian_spectrum,
    weyl_dimension,
    zero_mode_components,
)
from .quasicoherent import (
    PointCloud,
    QuasiCoherentState,
    displacement_hamiltonian,
    qcml_cloud,
    qg_point_cloud,
    quasi_coherent_state,
)
from .reference_geometries import (
    SpinLabel,
    commuting_config,
    fuzzy_cpn,
    fuzzy_sphere,
    fuzzy_torus,
)
from .topology import (
    berry_flux,
    chern_number,
    find_degeneracy_points,
    metric_dimension,
    qgt,
    quantum_distance,
)
from .training import TrainingConfig, TrainingReport, loss, loss_gradient, train

__version__ = tool_version()
