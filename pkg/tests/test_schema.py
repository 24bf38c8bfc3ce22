from unittest.mock import MagicMock

import numpy as np
import pytest

pytest.importorskip('nomad')

from nomad.datamodel import EntryArchive, EntryMetadata  # noqa: E402

from qgeom.data_transformations import (  # noqa: E402
    MatrixConfigurationSection,
    QuantumGeometryAnalysis,
    QuantumGeometryResult,
)
from qgeom.datasets import sphere_uniform  # noqa: E402
from qgeom.helper.archive_builder.qgeom_archive import (  # noqa: E402
    get_quantum_geometry_result,
)
from qgeom.reference_geometries import SpinLabel, fuzzy_sphere  # noqa: E402
from qgeom.topology import BerryFlux  # noqa: E402


def normalized(analysis):
    logger = MagicMock()
    archive = EntryArchive(metadata=EntryMetadata())
    analysis.normalize(archive, logger)
    return analysis, logger


def test_fuzzy_sphere_analysis():
    analysis, _ = normalized(
        QuantumGeometryAnalysis(
            configuration=MatrixConfigurationSection(
                reference_geometry='fuzzy_sphere', two_j=1
            ),
            n_samples=20,
            chern_center=[0.0, 0.0, 0.0],
            chern_radius=0.3,
        )
    )
    assert analysis.configuration.hilbert_dim == 2
    assert analysis.configuration.feature_dim == 3
    result = analysis.outputs[0]
    assert result.zero_mode_count == 1
    assert list(result.component_ranks) == [2]
    assert result.metric_dimension == 2
    assert result.classification == 'deep-quantum'
    assert abs(result.chern_number) == 1
    # only one nonzero level, so there is nothing to fit
    assert result.weyl_dimension is None

    spectrum = result.laplacian_spectrum
    np.testing.assert_allclose(spectrum.data, [0.0, 2.0, 2.0, 2.0], atol=1e-9)
    assert spectrum.count == 4
    assert spectrum.mean == pytest.approx(1.5)
    assert spectrum.maximum == pytest.approx(2.0)


def test_incomplete_reference_is_logged():
    analysis, logger = normalized(
        QuantumGeometryAnalysis(
            configuration=MatrixConfigurationSection(reference_geometry='fuzzy_cpn')
        )
    )
    logger.warn.assert_called()
    assert not analysis.outputs


def test_configuration_section_round_trip(spin_one):
    section = MatrixConfigurationSection.from_configuration(spin_one)
    assert section.hilbert_dim == 3
    np.testing.assert_array_equal(
        section.to_configuration().observables, spin_one.observables
    )


def test_cloud_statistics_of_data_points():
    logger = MagicMock()
    result = get_quantum_geometry_result(
        QuantumGeometryResult,
        fuzzy_sphere(SpinLabel(1)),
        logger,
        n_samples=10,
        data=sphere_uniform(12, seed=0).rows,
    )
    result.normalize(EntryArchive(metadata=EntryMetadata()), logger)
    assert result.skipped_points == 0
    assert result.displacement_sq.count == 12
    # unit sphere points against spin one half: d^2 = 1/4, sigma^2 = 1/2
    assert result.displacement_sq.mean == pytest.approx(0.25)
    assert result.variance.maximum == pytest.approx(0.5)


def test_fractional_flux_is_not_archived_as_a_charge(monkeypatch):
    monkeypatch.setattr(
        'qgeom.helper.archive_builder.qgeom_archive.berry_flux',
        lambda *args, **kwargs: BerryFlux(flux=0.5, min_gap=1.0),
    )
    logger = MagicMock()
    result = get_quantum_geometry_result(
        QuantumGeometryResult,
        fuzzy_sphere(SpinLabel(1)),
        logger,
        n_samples=5,
        chern_center=[0.0, 0.0, 0.0],
        chern_radius=0.5,
    )
    assert result.berry_flux == pytest.approx(0.5)
    assert result.chern_number is None
    messages = [call.args[0] for call in logger.warn.call_args_list]
    assert 'could not integrate the Berry curvature' in messages


def test_sphere_through_a_degeneracy_leaves_the_charge_empty():
    logger = MagicMock()
    result = get_quantum_geometry_result(
        QuantumGeometryResult,
        fuzzy_sphere(SpinLabel(1)),
        logger,
        n_samples=5,
        chern_center=[0.0, 0.0, 0.5],
        chern_radius=0.5,
    )
    assert result.chern_number is None
    assert result.berry_flux is None
    messages = [call.args[0] for call in logger.warn.call_args_list]
    assert 'could not integrate the Berry curvature' in messages
