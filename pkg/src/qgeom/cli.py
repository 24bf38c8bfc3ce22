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
The ``qgeom`` command line.

Every command reads and writes plain files, writes its outputs atomically and
leaves a ``<output>.manifest.json`` next to each of them. Exit codes are 0 on
success, 2 for invalid input and 3 for numerical failures.
"""

import json
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np
import pandas as pd
import pydantic
import structlog
from threadpoolctl import threadpool_limits

from . import datasets, reference_geometries
from .configuration import MatrixConfiguration
from .exceptions import FitError, NumericalError, QGeomError, ValidationError
from .helper.utilities import (
    RunManifest,
    atomic_write_text,
    spectrum_frame,
    to_jsonable,
    write_frame,
    write_json,
)
from .laplacian import (
    classify_configuration,
    eigenmap_overlap,
    laplacian_spectrum,
    weyl_dimension,
    zero_mode_components,
)
from .quasicoherent import default_region, qcml_cloud, qg_point_cloud
from .topology import (
    AffineSlice,
    assign_charges,
    berry_flux,
    find_degeneracy_points,
    metric_dimension,
)
from .training import TrainingConfig, train

logger = structlog.get_logger(__name__)

DEFAULT_CONFIG = 'config.json'


class FloatList(click.ParamType):
    name = 'floats'

    def convert(self, value, param, ctx):
        if isinstance(value, list | tuple):
            return [float(v) for v in value]
        try:
            return [float(v) for v in str(value).split(',') if v.strip()]
        except ValueError:
            self.fail(f'{value!r} is not a comma separated list of numbers', param, ctx)


class IntList(click.ParamType):
    name = 'ints'

    def convert(self, value, param, ctx):
        if isinstance(value, list | tuple):
            return [int(v) for v in value]
        try:
            return [int(v) for v in str(value).split(',') if v.strip()]
        except ValueError:
            self.fail(f'{value!r} is not a list of integers', param, ctx)


FLOATS = FloatList()
INTS = IntList()


class QGeomGroup(click.Group):
    """Maps library errors onto exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (ValidationError, pydantic.ValidationError) as e:
            click.echo(f'error: {e}', err=True)
            ctx.exit(2)
        except NumericalError as e:
            click.echo(f'error: {e}', err=True)
            ctx.exit(3)
        except QGeomError as e:
            click.echo(f'error: {e}', err=True)
            ctx.exit(2)


def _configure_logging(verbose):
    level = logging.WARNING - 10 * min(verbose, 2)
    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(sys.stderr),
        cache_logger_on_first_use=False,
    )


@contextmanager
def recorded(command, inputs=(), seeds=None, **parameters):
    """Bounds the thread pools, times the command and writes its manifests."""
    ctx = click.get_current_context()
    threads = ctx.find_root().obj.get('threads')
    manifest = RunManifest(
        command=command,
        parameters=to_jsonable({**parameters, 'threads': threads}),
        seeds=seeds or {},
        inputs=[str(p) for p in inputs],
    )
    started = time.perf_counter()
    with threadpool_limits(limits=threads):
        yield manifest
    manifest.wall_time = time.perf_counter() - started
    for output in manifest.outputs:
        manifest.write(output)


def _emit(manifest, path, data):
    write_json(path, data)
    manifest.outputs.append(str(path))
    click.echo(json.dumps(to_jsonable(data)))


def _slice(cfg, axes, origin):
    frame = np.zeros((3, cfg.feature_dim))
    if len(axes) != 3:
        raise ValidationError('--axes needs three feature indices')
    if max(axes) >= cfg.feature_dim or min(axes) < 0:
        raise ValidationError(f'--axes must index features 0..{cfg.feature_dim - 1}')
    frame[np.arange(3), axes] = 1.0
    origin = np.zeros(cfg.feature_dim) if origin is None else np.asarray(origin)
    if origin.shape != (cfg.feature_dim,):
        raise ValidationError(f'--origin needs {cfg.feature_dim} coordinates')
    return AffineSlice(origin, frame)


def _three(values, option):
    if len(values) != 3:
        raise ValidationError(f'{option} needs three coordinates')
    return np.asarray(values, dtype=np.float64)


config_option = click.option(
    '--config',
    'config_path',
    type=click.Path(exists=True, dir_okay=False),
    default=DEFAULT_CONFIG,
    show_default=True,
    help='Matrix configuration JSON.',
)
header_option = click.option(
    '--has-header', is_flag=True, help='The data CSV starts with a header line.'
)
slice_options = [
    click.option(
        '--axes', type=INTS, default='0,1,2', show_default=True, help='Slice axes.'
    ),
    click.option('--origin', type=FLOATS, default=None, help='Slice origin in R^D.'),
]


def with_slice(f):
    for option in reversed(slice_options):
        f = option(f)
    return f


@click.group(cls=QGeomGroup)
@click.option(
    '--threads',
    type=click.IntRange(min=1),
    envvar='QGEOM_THREADS',
    default=None,
    help='Thread limit for linear algebra (default: all cores).',
)
@click.option('-v', '--verbose', count=True, help='More log output on stderr.')
@click.version_option(package_name='nomad-quantum-geometry')
@click.pass_context
def cli(ctx, threads, verbose):
    """Learn quantum geometries from point clouds and analyse them."""
    _configure_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj['threads'] = threads


@cli.group(cls=QGeomGroup)
def generate():
    """Write synthetic datasets as headerless CSV."""


def _write_dataset(manifest, ds, output):
    for path in datasets.save_csv(ds, output):
        manifest.outputs.append(str(path))


@generate.command('sphere')
@click.option('--n', type=click.IntRange(min=1), default=1000, show_default=True)
@click.option('--radius', type=float, default=1.0, show_default=True)
@click.option('--center', type=FLOATS, default='0,0,0', show_default=True)
@click.option('--noise', type=float, default=0.0, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default='sphere.csv')
def cmd_generate_sphere(n, radius, center, noise, seed, output):
    with recorded(
        'generate sphere', seeds={'seed': seed}, n=n, radius=radius, noise=noise
    ) as manifest:
        ds = datasets.sphere_uniform(n, radius, _three(center, '--center'), noise, seed)
        _write_dataset(manifest, ds, output)


@generate.command('two-spheres')
@click.option('--n', type=click.IntRange(min=2), default=2000, show_default=True)
@click.option('--noise', type=float, default=0.1, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--area-weighted', is_flag=True, help='Split points by sphere area.')
@click.option('-o', '--output', type=click.Path(), default='two-spheres.csv')
def cmd_generate_two_spheres(n, noise, seed, area_weighted, output):
    with recorded(
        'generate two-spheres',
        seeds={'seed': seed},
        n=n,
        noise=noise,
        area_weighted=area_weighted,
    ) as manifest:
        ds = datasets.two_spheres(
            n, noise_sigma=noise, seed=seed, area_weighted=area_weighted
        )
        _write_dataset(manifest, ds, output)


@generate.command('sphere-nonuniform')
@click.option('--n', type=click.IntRange(min=1), default=2000, show_default=True)
@click.option('--noise', type=float, default=0.1, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default='sphere-nonuniform.csv')
def cmd_generate_sphere_nonuniform(n, noise, seed, output):
    with recorded(
        'generate sphere-nonuniform', seeds={'seed': seed}, n=n, noise=noise
    ) as manifest:
        _write_dataset(manifest, datasets.sphere_nonuniform(n, noise, seed), output)


@generate.command('conformal')
@click.option('--n-maps', type=click.IntRange(min=1), default=2000, show_default=True)
@click.option('--n-ref', type=click.IntRange(min=1), default=100, show_default=True)
@click.option('--a-max', type=float, default=0.9, show_default=True)
@click.option('--theta', type=float, default=0.0, show_default=True)
@click.option('--random-theta', is_flag=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default='conformal.csv')
def cmd_generate_conformal(n_maps, n_ref, a_max, theta, random_theta, seed, output):
    with recorded(
        'generate conformal',
        seeds={'seed': seed},
        n_maps=n_maps,
        n_ref=n_ref,
        a_max=a_max,
        theta=theta,
        random_theta=random_theta,
    ) as manifest:
        ds = datasets.conformal_maps(n_maps, n_ref, a_max, theta, seed, random_theta)
        _write_dataset(manifest, ds, output)


@generate.command('blaschke-potapov')
@click.option('--n-maps', type=click.IntRange(min=1), default=2000, show_default=True)
@click.option('--n-ref', type=click.IntRange(min=1), default=100, show_default=True)
@click.option('--ball-dim', type=click.IntRange(2, 5), default=2, show_default=True)
@click.option('--a-max', type=float, default=0.9, show_default=True)
@click.option('--theta', type=float, default=0.0, show_default=True)
@click.option('--random-theta', is_flag=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default='blaschke-potapov.csv')
def cmd_generate_blaschke_potapov(
    n_maps, n_ref, ball_dim, a_max, theta, random_theta, seed, output
):
    with recorded(
        'generate blaschke-potapov',
        seeds={'seed': seed},
        n_maps=n_maps,
        n_ref=n_ref,
        ball_dim=ball_dim,
        a_max=a_max,
        theta=theta,
        random_theta=random_theta,
    ) as manifest:
        ds = datasets.blaschke_potapov(
            n_maps, n_ref, ball_dim, a_max, seed, theta, random_theta
        )
        _write_dataset(manifest, ds, output)


@generate.command('wbc')
@click.option(
    '--input', 'input_path', type=click.Path(exists=True, dir_okay=False), required=True
)
@header_option
@click.option('-o', '--output', type=click.Path(), default='wbc-scaled.csv')
def cmd_generate_wbc(input_path, has_header, output):
    """Standard-scaled copy of a breast cancer (WBC) feature table."""
    with recorded(
        'generate wbc', inputs=[input_path], has_header=has_header
    ) as manifest:
        wbc = datasets.load_wbc(input_path, has_header)
        scaled, _, _ = datasets.standard_scale(wbc)
        _write_dataset(manifest, scaled, output)


@cli.command('train')
@click.option(
    '--data', type=click.Path(exists=True, dir_okay=False), required=True
)
@header_option
@click.option('--hilbert-dim', type=int, default=8, show_default=True, help='N')
@click.option('--weight', type=float, default=0.1, show_default=True, help='w')
@click.option('--epochs', type=int, default=20000, show_default=True)
@click.option('--batch', type=int, default=100, show_default=True)
@click.option('--learning-rate', type=float, default=1e-2, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--nondeterministic', is_flag=True, help='Unordered gradient sums.')
@click.option('--log-every', type=int, default=100, show_default=True)
@click.option('--checkpoint-every', type=int, default=None)
@click.option('-o', '--output', type=click.Path(), default=DEFAULT_CONFIG)
@click.option('--report', type=click.Path(), default=None)
@click.pass_context
def cmd_train(
    ctx,
    data,
    has_header,
    hilbert_dim,
    weight,
    epochs,
    batch,
    learning_rate,
    seed,
    nondeterministic,
    log_every,
    checkpoint_every,
    output,
    report,
):
    """Fit a matrix configuration to a CSV point cloud."""
    threads = ctx.find_root().obj.get('threads')
    tc = TrainingConfig(
        hilbert_dim=hilbert_dim,
        fluctuation_weight=weight,
        learning_rate=learning_rate,
        epochs=epochs,
        batch_size=batch,
        seed=seed,
        deterministic_reduction=not nondeterministic,
        log_every=log_every,
        checkpoint_every=checkpoint_every,
        checkpoint_path=f'{output}.checkpoint.json' if checkpoint_every else None,
        threads=threads,
    )
    with recorded(
        'train', inputs=[data], seeds={'seed': seed}, **tc.model_dump(mode='json')
    ) as manifest:
        ds = datasets.load_csv(data, has_header)
        cfg, training_report = train(ds, tc)
        cfg.save(output)
        report_path = report or f'{output}.report.json'
        atomic_write_text(report_path, training_report.model_dump_json(indent=2))
        manifest.outputs.extend([str(output), str(report_path)])
        click.echo(
            f'final loss {training_report.final_loss!r}, '
            f'skipped points {training_report.skipped_points}'
        )


def _cloud_frame(cloud):
    if len(cloud) == 0:
        return pd.DataFrame()
    d = cloud.sources.shape[1]
    frame = pd.DataFrame(cloud.sources, columns=[f'x_{a}' for a in range(d)])
    for a in range(d):
        frame[f'image_{a}'] = cloud.images[:, a]
    frame['displacement_sq'] = cloud.displacement_sq
    frame['variance'] = cloud.variance
    frame['energy'] = cloud.energy
    return frame


@cli.command('cloud')
@config_option
@click.option('--data', type=click.Path(exists=True, dir_okay=False), required=True)
@header_option
@click.option('-o', '--output', type=click.Path(), default='cloud.csv')
def cmd_cloud(config_path, data, has_header, output):
    """QCML point cloud of the data rows."""
    with recorded('cloud', inputs=[config_path, data]) as manifest:
        cfg = MatrixConfiguration.load(config_path)
        cloud = qcml_cloud(cfg, datasets.load_csv(data, has_header))
        write_frame(output, _cloud_frame(cloud))
        manifest.parameters['skipped'] = cloud.skipped
        manifest.outputs.append(str(output))


@cli.command('qg-cloud')
@config_option
@click.option(
    '--data',
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help='Data whose inflated bounding box is sampled.',
)
@header_option
@click.option('--lower', type=FLOATS, default=None, help='Lower box corner.')
@click.option('--upper', type=FLOATS, default=None, help='Upper box corner.')
@click.option('--n-samples', type=click.IntRange(min=0), default=1000)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default='qg-cloud.csv')
def cmd_qg_cloud(
    config_path, data, has_header, lower, upper, n_samples, seed, output
):
    """Point cloud of random samples from a box in feature space."""
    inputs = [config_path] + ([data] if data else [])
    with recorded(
        'qg-cloud', inputs=inputs, seeds={'seed': seed}, n_samples=n_samples
    ) as manifest:
        cfg = MatrixConfiguration.load(config_path)
        if lower is not None and upper is not None:
            region = (np.asarray(lower), np.asarray(upper))
        elif data:
            region = default_region(datasets.load_csv(data, has_header).rows)
        else:
            raise ValidationError('give either --lower and --upper or --data')
        cloud = qg_point_cloud(cfg, region, n_samples, seed)
        write_frame(output, _cloud_frame(cloud))
        manifest.parameters['region'] = [list(region[0]), list(region[1])]
        manifest.parameters['skipped'] = cloud.skipped
        manifest.outputs.append(str(output))


@cli.command('laplacian')
@config_option
@click.option('-o', '--output', type=click.Path(), default='spectrum.csv')
def cmd_laplacian(config_path, output):
    """Eigenvalues of the matrix Laplacian."""
    with recorded('laplacian', inputs=[config_path]) as manifest:
        analysis = laplacian_spectrum(MatrixConfiguration.load(config_path))
        write_frame(output, spectrum_frame(analysis.eigenvalues))
        manifest.outputs.append(str(output))


@cli.command('eigenmaps')
@config_option
@click.option('--modes', type=click.IntRange(min=1), default=None)
@click.option('-o', '--output', type=click.Path(), default='overlap.csv')
@click.option('--eigenmaps-output', type=click.Path(), default=None)
def cmd_eigenmaps(config_path, modes, output, eigenmaps_output):
    """Overlaps ``Tr(Y_i X_a)`` and the eigenmaps themselves."""
    with recorded('eigenmaps', inputs=[config_path], modes=modes) as manifest:
        cfg = MatrixConfiguration.load(config_path)
        analysis = laplacian_spectrum(cfg)
        modes = min(modes or len(analysis.eigenvalues), len(analysis.eigenvalues))
        overlap = eigenmap_overlap(analysis, cfg)[:, :modes]
        write_frame(
            output, pd.DataFrame(overlap, columns=[f'Y_{i}' for i in range(modes)])
        )
        maps_path = eigenmaps_output or str(Path(output).with_suffix('.eigenmaps.json'))
        analysis.eigenmap_configuration(range(modes)).save(maps_path)
        manifest.outputs.extend([str(output), str(maps_path)])


@cli.command('dimension')
@config_option
@click.option('--data', type=click.Path(exists=True, dir_okay=False), required=True)
@header_option
@click.option('--threshold', type=float, default=5.0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default='dimension.json')
@click.option('--spectra-output', type=click.Path(), default=None)
def cmd_dimension(config_path, data, has_header, threshold, output, spectra_output):
    """Weyl-law and metric-spectrum estimates of the intrinsic dimension."""
    with recorded(
        'dimension', inputs=[config_path, data], threshold=threshold
    ) as manifest:
        cfg = MatrixConfiguration.load(config_path)
        try:
            weyl_d = weyl_dimension(laplacian_spectrum(cfg))
        except FitError as e:
            logger.warning('weyl fit failed', error=str(e))
            weyl_d = None
        points = datasets.load_csv(data, has_header).rows
        metric = metric_dimension(cfg, points, threshold)
        spectra_path = spectra_output or str(Path(output).with_suffix('.spectra.csv'))
        frame = pd.DataFrame(
            metric.spectra, columns=[f'g_{i}' for i in range(cfg.feature_dim)]
        )
        frame.insert(0, 'dimension', metric.dimensions)
        write_frame(spectra_path, frame)
        manifest.outputs.append(str(spectra_path))
        _emit(
            manifest,
            output,
            {
                'weyl_d': weyl_d,
                'metric_d': metric.estimate,
                'metric_support': metric.support,
                'skipped': metric.skipped,
            },
        )


@cli.command('monopoles')
@config_option
@with_slice
@click.option('--n-starts', type=click.IntRange(min=1), default=16, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--radius', type=float, default=None, help='Charge sphere radius.')
@click.option('-o', '--output', type=click.Path(), default='monopoles.json')
def cmd_monopoles(config_path, axes, origin, n_starts, seed, radius, output):
    """Degeneracy points of H(x) in a 3-dimensional slice with their charges."""
    with recorded(
        'monopoles',
        inputs=[config_path],
        seeds={'seed': seed},
        axes=axes,
        origin=origin,
        n_starts=n_starts,
        radius=radius,
    ) as manifest:
        cfg = MatrixConfiguration.load(config_path)
        affine_slice = _slice(cfg, axes, origin)
        points = find_degeneracy_points(cfg, affine_slice, n_starts=n_starts, seed=seed)
        points = assign_charges(cfg, points, radius=radius)
        _emit(manifest, output, [p.to_dict() for p in points])


@cli.command('chern')
@config_option
@with_slice
@click.option('--center', type=FLOATS, default='0,0,0', show_default=True)
@click.option('--radius', type=float, default=0.5, show_default=True)
@click.option('--grid', type=INTS, default='24,24', show_default=True)
@click.option('-o', '--output', type=click.Path(), default='chern.json')
def cmd_chern(config_path, axes, origin, center, radius, grid, output):
    """Chern number of the ground-state bundle on a sphere in the slice."""
    with recorded(
        'chern',
        inputs=[config_path],
        axes=axes,
        origin=origin,
        center=center,
        radius=radius,
        grid=grid,
    ) as manifest:
        if len(grid) != 2:
            raise ValidationError('--grid needs n_theta,n_phi')
        grid = tuple(grid)
        cfg = MatrixConfiguration.load(config_path)
        affine_slice = _slice(cfg, axes, origin)
        center = _three(center, '--center')
        flux = berry_flux(cfg, center, radius, grid, affine_slice)
        charge = flux.charge()
        _emit(
            manifest,
            output,
            {
                'charge': charge,
                'flux': flux.flux,
                'residual': flux.residual,
                'min_gap': flux.min_gap,
            },
        )


@cli.command('components')
@config_option
@click.option('--tol-zero', type=float, default=None, help='Zero-mode threshold.')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default='components.json')
def cmd_components(config_path, tol_zero, seed, output):
    """Projectors onto the connected components from the Laplacian zero modes."""
    with recorded(
        'components', inputs=[config_path], seeds={'seed': seed}, tol_zero=tol_zero
    ) as manifest:
        cfg = MatrixConfiguration.load(config_path)
        components = zero_mode_components(laplacian_spectrum(cfg), tol_zero, seed)
        projectors = MatrixConfiguration(components.projectors).to_dict()
        _emit(
            manifest,
            output,
            {
                'count': len(components),
                'ranks': components.ranks,
                'residual': components.residual,
                'idempotency_defect': components.idempotency_defect,
                'projectors': projectors['observables'],
            },
        )


@cli.command('classify')
@config_option
@click.option('-o', '--output', type=click.Path(), default='classify.json')
def cmd_classify(config_path, output):
    """Classical, almost-commutative or deep-quantum."""
    with recorded('classify', inputs=[config_path]) as manifest:
        result = classify_configuration(MatrixConfiguration.load(config_path))
        _emit(manifest, output, {'tag': result.tag, 'ratio': result.ratio})


@cli.group(cls=QGeomGroup)
def oracle():
    """Write closed-form reference configurations."""


def _write_config(manifest, cfg, output):
    cfg.save(output)
    manifest.outputs.append(str(output))


@oracle.command('fuzzy-sphere')
@click.option('--two-j', type=click.IntRange(min=1), required=True, help='2j')
@click.option('--alpha', type=float, default=1.0, show_default=True)
@click.option('-o', '--output', type=click.Path(), default=DEFAULT_CONFIG)
def cmd_oracle_fuzzy_sphere(two_j, alpha, output):
    with recorded('oracle fuzzy-sphere', two_j=two_j, alpha=alpha) as manifest:
        spin = reference_geometries.SpinLabel(two_j)
        _write_config(manifest, reference_geometries.fuzzy_sphere(spin, alpha), output)


@oracle.command('fuzzy-cpn')
@click.option('--n', type=click.IntRange(min=2), required=True, help='N')
@click.option('-o', '--output', type=click.Path(), default=DEFAULT_CONFIG)
def cmd_oracle_fuzzy_cpn(n, output):
    with recorded('oracle fuzzy-cpn', n=n) as manifest:
        _write_config(manifest, reference_geometries.fuzzy_cpn(n), output)


@oracle.command('fuzzy-torus')
@click.option('--n', type=click.IntRange(min=2), required=True, help='N')
@click.option('-o', '--output', type=click.Path(), default=DEFAULT_CONFIG)
def cmd_oracle_fuzzy_torus(n, output):
    with recorded('oracle fuzzy-torus', n=n) as manifest:
        _write_config(manifest, reference_geometries.fuzzy_torus(n), output)


@oracle.command('commuting')
@click.option('--points', type=click.Path(exists=True, dir_okay=False), required=True)
@header_option
@click.option('-o', '--output', type=click.Path(), default=DEFAULT_CONFIG)
def cmd_oracle_commuting(points, has_header, output):
    with recorded('oracle commuting', inputs=[points]) as manifest:
        rows = datasets.load_csv(points, has_header).rows
        _write_config(manifest, reference_geometries.commuting_config(rows), output)


if __name__ == '__main__':
    cli()
