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

import numpy as np
from nomad.datamodel.data import ArchiveSection
from nomad.datamodel.metainfo.basesections import Analysis, AnalysisResult
from nomad.metainfo import MEnum, Quantity, Section, SubSection

from ..configuration import MatrixConfiguration
from ..exceptions import QGeomError
from ..reference_geometries import REFERENCE_GEOMETRIES, reference_configuration
from .data_baseclasses import DataWithStatistics, SpectrumWithStatistics


class MatrixConfigurationSection(ArchiveSection):
    """
    Hermitian observables ``X_1 .. X_D`` either read from a configuration
    JSON file or built from one of the closed-form reference geometries.
    """

    m_def = Section(label_quantity='reference_geometry')

    data_file = Quantity(
        type=str,
        description='Matrix configuration JSON as written by qgeom.',
        a_eln=dict(component='FileEditQuantity'),
        a_browser=dict(adaptor='RawFileAdaptor'),
    )

    reference_geometry = Quantity(
        type=MEnum(*REFERENCE_GEOMETRIES),
        a_eln=dict(component='EnumEditQuantity'),
    )

    two_j = Quantity(
        type=np.dtype(np.int64),
        description='Twice the spin of a fuzzy sphere.',
        a_eln=dict(component='NumberEditQuantity'),
    )

    alpha = Quantity(
        type=np.dtype(np.float64),
        default=1.0,
        description='Scale of the fuzzy sphere generators.',
        a_eln=dict(component='NumberEditQuantity'),
    )

    size = Quantity(
        type=np.dtype(np.int64),
        description='Matrix size of a fuzzy CP^(N-1) or fuzzy torus.',
        a_eln=dict(component='NumberEditQuantity'),
    )

    hilbert_dim = Quantity(type=np.dtype(np.int64))

    feature_dim = Quantity(type=np.dtype(np.int64))

    observables_real = Quantity(type=np.dtype(np.float64), shape=['*', '*', '*'])

    observables_imag = Quantity(type=np.dtype(np.float64), shape=['*', '*', '*'])

    @classmethod
    def from_configuration(cls, cfg):
        section = cls()
        section.store(cfg)
        return section

    def store(self, cfg):
        self.hilbert_dim = cfg.hilbert_dim
        self.feature_dim = cfg.feature_dim
        self.observables_real = cfg.observables.real
        self.observables_imag = cfg.observables.imag

    def to_configuration(self):
        if self.observables_real is None or self.observables_imag is None:
            return None
        return MatrixConfiguration(
            np.asarray(self.observables_real) + 1j * np.asarray(self.observables_imag)
        )

    def normalize(self, archive, logger):
        super().normalize(archive, logger)
        try:
            if self.data_file:
                with archive.m_context.raw_file(self.data_file) as f:
                    cfg = MatrixConfiguration.from_json(f.read())
            elif self.reference_geometry:
                cfg = reference_configuration(
                    self.reference_geometry, self.two_j, self.alpha, self.size
                )
            else:
                return
        except QGeomError as e:
            logger.warn('could not build the matrix configuration', exc_info=e)
            return
        self.store(cfg)


class QuantumGeometryResult(AnalysisResult):
    m_def = Section(
        a_plot=[
            {
                'label': 'Laplacian spectrum',
                'x': 'laplacian_spectrum/index',
                'y': 'laplacian_spectrum/data',
                'lines': [{'mode': 'markers'}],
                'layout': {
                    'yaxis': {'fixedrange': False},
                    'xaxis': {'fixedrange': False},
                },
            },
        ],
    )

    hilbert_dim = Quantity(type=np.dtype(np.int64))

    feature_dim = Quantity(type=np.dtype(np.int64))

    laplacian_spectrum = SubSection(
        section_def=SpectrumWithStatistics,
        description='Eigenvalues of the matrix Laplacian.',
    )

    zero_mode_count = Quantity(
        type=np.dtype(np.int64),
        description='Number of Laplacian eigenvalues at zero.',
    )

    component_ranks = Quantity(
        type=np.dtype(np.int64),
        shape=['*'],
        description='Ranks of the projectors onto the connected components.',
    )

    weyl_dimension = Quantity(
        type=np.dtype(np.float64),
        description='Dimension from the growth of the eigenvalue counting function.',
    )

    metric_dimension = Quantity(
        type=np.dtype(np.int64),
        description='Most frequent rank of the quantum metric over sampled points.',
    )

    metric_dimension_support = Quantity(type=np.dtype(np.float64))

    classification = Quantity(
        type=MEnum('classical', 'almost-commutative', 'deep-quantum'),
    )

    noncommutativity_ratio = Quantity(type=np.dtype(np.float64))

    displacement_sq = SubSection(
        section_def=DataWithStatistics,
        description='Squared displacements of the data points from their images.',
    )

    variance = SubSection(
        section_def=DataWithStatistics,
        description='Quantum fluctuations at the data points.',
    )

    skipped_points = Quantity(
        type=np.dtype(np.int64),
        description='Data points with a degenerate ground state.',
    )

    berry_flux = Quantity(type=np.dtype(np.float64))

    chern_number = Quantity(type=np.dtype(np.int64))

    def normalize(self, archive, logger):
        for section in (self.laplacian_spectrum, self.displacement_sq, self.variance):
            if section is not None:
                section.normalize(archive, logger)
        super().normalize(archive, logger)


class QuantumGeometryAnalysis(Analysis):
    m_def = Section(label_quantity='name')

    configuration = SubSection(section_def=MatrixConfigurationSection)

    data_file = Quantity(
        type=str,
        description='Optional CSV point cloud evaluated against the configuration.',
        a_eln=dict(component='FileEditQuantity'),
        a_browser=dict(adaptor='RawFileAdaptor'),
    )

    has_header = Quantity(
        type=bool,
        default=False,
        a_eln=dict(component='BoolEditQuantity'),
    )

    n_samples = Quantity(
        type=np.dtype(np.int64),
        default=200,
        description='Random points used for the metric dimension.',
        a_eln=dict(component='NumberEditQuantity'),
    )

    seed = Quantity(
        type=np.dtype(np.int64),
        default=0,
        a_eln=dict(component='NumberEditQuantity'),
    )

    chern_center = Quantity(
        type=np.dtype(np.float64),
        shape=[3],
        description='Center of the sphere for the Chern number, first three axes.',
        a_eln=dict(component='NumberEditQuantity'),
    )

    chern_radius = Quantity(
        type=np.dtype(np.float64),
        a_eln=dict(component='NumberEditQuantity'),
    )

    outputs = Analysis.outputs.m_copy()
    outputs.section_def = QuantumGeometryResult

    def normalize(self, archive, logger):
        if self.configuration is None:
            return
        self.configuration.normalize(archive, logger)
        cfg = self.configuration.to_configuration()
        if cfg is None:
            return
        from ..datasets import load_csv
        from ..helper.archive_builder.qgeom_archive import (
            get_quantum_geometry_result,
        )

        data = None
        if self.data_file:
            try:
                with archive.m_context.raw_file(self.data_file) as f:
                    data = load_csv(f, bool(self.has_header)).rows
            except QGeomError as e:
                logger.warn('could not read the data file', exc_info=e)

        try:
            result = get_quantum_geometry_result(
                QuantumGeometryResult,
                cfg,
                logger,
                n_samples=int(self.n_samples),
                seed=int(self.seed),
                chern_center=self.chern_center,
                chern_radius=self.chern_radius,
                data=data,
            )
        except QGeomError as e:
            logger.warn('could not analyse the matrix configuration', exc_info=e)
            return
        result.normalize(archive, logger)
        self.outputs = [result]
