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

from qgeom.data_transformations.data_baseclasses import (
    DataWithStatistics,
    SpectrumWithStatistics,
)
from qgeom.exceptions import QGeomError
from qgeom.laplacian import (
    classify_configuration,
    laplacian_spectrum,
    weyl_dimension,
    zero_mode_components,
)
from qgeom.quasicoherent import qcml_cloud, sample_region
from qgeom.topology import berry_flux, metric_dimension


def spectral_box(cfg):
    """Box spanned by the extreme eigenvalues of each observable."""
    eigenvalues = np.linalg.eigvalsh(cfg.observables)
    return eigenvalues[:, 0], eigenvalues[:, -1]


def get_quantum_geometry_result(
    result_cls,
    cfg,
    logger,
    n_samples=200,
    seed=0,
    chern_center=None,
    chern_radius=None,
    data=None,
):
    """
    Fills ``result_cls`` with the Laplacian spectrum, the zero-mode
    components, both dimension estimates and the commutativity class. A sphere
    adds the Berry flux, data rows add the statistics of their point cloud.
    Each failing part is logged and left empty.
    """
    analysis = laplacian_spectrum(cfg)
    result = result_cls(
        hilbert_dim=cfg.hilbert_dim,
        feature_dim=cfg.feature_dim,
        laplacian_spectrum=SpectrumWithStatistics(data=analysis.eigenvalues),
        zero_mode_count=analysis.zero_mode_count(),
    )

    try:
        result.component_ranks = zero_mode_components(analysis, seed=seed).ranks
    except QGeomError as e:
        logger.warn('could not split the zero modes into components', exc_info=e)

    try:
        result.weyl_dimension = weyl_dimension(analysis)
    except QGeomError as e:
        logger.warn('could not fit the eigenvalue counting function', exc_info=e)

    try:
        samples = sample_region(spectral_box(cfg), n_samples, seed)
        metric = metric_dimension(cfg, samples)
        result.metric_dimension = metric.estimate
        result.metric_dimension_support = metric.support
    except QGeomError as e:
        logger.warn('could not estimate the metric dimension', exc_info=e)

    if cfg.feature_dim >= 2:
        classification = classify_configuration(cfg)
        result.classification = classification.tag
        result.noncommutativity_ratio = classification.ratio

    if data is not None:
        try:
            cloud = qcml_cloud(cfg, data)
            result.skipped_points = len(cloud.skipped)
            if len(cloud) > 0:
                result.displacement_sq = DataWithStatistics(data=cloud.displacement_sq)
                result.variance = DataWithStatistics(data=cloud.variance)
        except QGeomError as e:
            logger.warn('could not evaluate the data points', exc_info=e)

    if chern_center is not None and chern_radius is not None:
        try:
            flux = berry_flux(cfg, np.asarray(chern_center), chern_radius)
            result.berry_flux = flux.flux
            result.chern_number = flux.charge()
        except QGeomError as e:
            logger.warn('could not integrate the Berry curvature', exc_info=e)
    return result
