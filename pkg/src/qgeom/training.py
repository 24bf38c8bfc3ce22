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
The QCML loss, its analytic gradient and the Adam training loop.

Per point the loss is ``d^2 + w sigma^2 = 2 w lambda + (1 - w) d^2``. The
gradient of ``lambda`` follows from Hellmann-Feynman, the gradient of ``d^2``
from first order perturbation theory of the ground state, so that

    G_b = w {A_b, P} + (1 - w) (2 c_b P + {A_b, Q})

with ``A_b = X_b - x_b``, ``P = |x><x|``, ``c = <X> - x`` and
``Q = |x><u| + |u><x|`` where ``u = R sum_a c_a X_a |x>`` and ``R`` is the
reduced resolvent of ``H(x)``. The loss changes by ``sum_b Tr(G_b dX_b)``.
"""

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from threadpoolctl import threadpool_limits

from .configuration import MatrixConfiguration
from .exceptions import TrainingDivergedError, ValidationError
from .linalg import hermitian_part, random_hermitian
from .quasicoherent import _as_points, cloud_quantities, displacement_spectra
from .reference_geometries import SpinLabel, fuzzy_sphere

logger = structlog.get_logger(__name__)

GRADIENT_RTOL = 1e-6


class TrainingConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    hilbert_dim: int = Field(8, ge=1, description='Hilbert space dimension N')
    fluctuation_weight: float = Field(
        0.1, gt=0, description='Weight w of the quantum fluctuations'
    )
    learning_rate: float = Field(1e-2, gt=0)
    epochs: int = Field(20000, ge=1)
    batch_size: int = Field(100, ge=1)
    seed: int = 0
    adam_beta1: float = Field(0.9, ge=0, lt=1)
    adam_beta2: float = Field(0.999, ge=0, lt=1)
    adam_epsilon: float = Field(1e-8, gt=0)
    deterministic_reduction: bool = True
    log_every: int = Field(100, ge=1)
    checkpoint_every: int | None = Field(None, ge=1)
    checkpoint_path: Path | None = None
    threads: int | None = Field(None, ge=1)


class TrainingReport(BaseModel):
    epoch_losses: list[float] = Field(default_factory=list)
    final_loss: float = Field(0.0, ge=0)
    skipped_points: int = Field(0, ge=0)
    wall_time: float = Field(0.0, ge=0)


class AdamOptimizer:
    """
    Adam with bias-corrected moments, applied element-wise to real parameters.

    Complex parameters are updated through their interleaved real view, so the
    real and imaginary parts of every entry carry their own moments. On a
    Hermitian parameter this keeps the update Hermitian.
    """

    def __init__(self, lr=1e-2, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = None
        self.v = None
        self.t = 0

    def step(self, params, grads):
        params = np.array(params)
        grads = np.ascontiguousarray(grads, dtype=params.dtype)
        p = params.view(np.float64)
        g = grads.view(np.float64)
        if self.m is None:
            self.m = np.zeros_like(p)
            self.v = np.zeros_like(p)
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t

        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * g
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (g * g)

        denom = np.sqrt(self.v / bc2) + self.epsilon
        p -= (self.lr / bc1) * self.m / denom
        return params


@dataclass(frozen=True, eq=False)
class LossEvaluation:
    loss: float
    gradient: np.ndarray
    count: int
    skipped: int


def _batch_terms(cfg, points, w, rtol):
    x = cfg.observables
    batch = displacement_spectra(cfg, points)
    eigenvalues, eigenvectors = batch.eigenvalues, batch.eigenvectors
    keep = batch.gaps > rtol * np.maximum(1.0, eigenvalues[:, -1])
    skipped = int(np.count_nonzero(~keep))
    points = points[keep]
    eigenvalues, eigenvectors = eigenvalues[keep], eigenvectors[keep]
    if len(points) == 0:
        return 0.0, np.zeros_like(x), 0, skipped

    psi = eigenvectors[:, :, 0]
    images, displacement_sq, variance = cloud_quantities(cfg, psi, points)
    loss = float(np.sum(displacement_sq + w * variance))

    c = images - points
    # u = R Xbar psi, R the reduced resolvent sum_{k>0} |k><k| / (l0 - lk)
    xbar_psi = np.einsum('pa,aij,pj->pi', c, x, psi)
    coefficients = np.einsum('pki,pk->pi', eigenvectors.conj(), xbar_psi)
    inverse = np.zeros_like(eigenvalues)
    inverse[:, 1:] = 1.0 / (eigenvalues[:, :1] - eigenvalues[:, 1:])
    u = np.einsum('pik,pk->pi', eigenvectors, coefficients * inverse)

    projector = np.einsum('pi,pj->pij', psi, psi.conj())
    q = np.einsum('pi,pj->pij', psi, u.conj())
    q = q + np.swapaxes(q, 1, 2).conj()
    s = w * projector + (1.0 - w) * q

    s_sum = s.sum(axis=0)
    gradient = (
        np.einsum('bij,jk->bik', x, s_sum)
        + np.einsum('ij,bjk->bik', s_sum, x)
        - 2.0 * np.einsum('pb,pij->bij', points, s)
        + 2.0 * (1.0 - w) * np.einsum('pb,pij->bij', c, projector)
    )
    return loss, gradient, len(points), skipped


def loss_and_gradient(
    cfg, batch, w, rtol=GRADIENT_RTOL, workers=1, deterministic_reduction=True
):
    """
    Summed loss and gradient over the rows of ``batch``.

    Rows whose gap is at most ``rtol * max(1, lambda_max)`` are skipped and
    counted. With ``workers > 1`` the rows are split into chunks evaluated on
    a thread pool; ``deterministic_reduction`` sums the chunk results in chunk
    order, otherwise in order of completion.
    """
    points, _ = _as_points(cfg, batch)
    if workers <= 1 or len(points) < 2 * workers:
        loss, gradient, count, skipped = _batch_terms(cfg, points, w, rtol)
        return LossEvaluation(loss, gradient, count, skipped)

    chunks = np.array_split(points, workers)
    total_loss, count, skipped = 0.0, 0, 0
    gradient = np.zeros_like(cfg.observables)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        if deterministic_reduction:
            results = pool.map(lambda chunk: _batch_terms(cfg, chunk, w, rtol), chunks)
        else:
            futures = [
                pool.submit(_batch_terms, cfg, chunk, w, rtol) for chunk in chunks
            ]
            results = (future.result() for future in as_completed(futures))
        for chunk_loss, chunk_gradient, chunk_count, chunk_skipped in results:
            total_loss += chunk_loss
            gradient += chunk_gradient
            count += chunk_count
            skipped += chunk_skipped
    return LossEvaluation(total_loss, gradient, count, skipped)


def loss(cfg, batch, w):
    return loss_and_gradient(cfg, batch, w).loss


def loss_gradient(cfg, batch, w):
    return loss_and_gradient(cfg, batch, w).gradient


def initialize(hilbert_dim, feature_dim, data, seed):
    """
    Random Hermitian observables matched to the first two moments of the data.

    ``X_a = mean_a * 1 + std_a * sqrt(N) * H_a / ||H_a||`` with ``H_a`` drawn
    from the Gaussian unitary ensemble, so that ``||X_a - mean_a||/sqrt(N)``
    equals the standard deviation of feature ``a``.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[1] != feature_dim:
        raise ValidationError(
            f'data has {data.shape[1]} features, expected {feature_dim}'
        )
    if len(data) == 0:
        raise ValidationError('cannot initialize from an empty dataset')
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    rng = np.random.default_rng(seed)
    identity = np.eye(hilbert_dim)
    observables = []
    for a in range(feature_dim):
        h = random_hermitian(hilbert_dim, rng)
        norm = np.linalg.norm(h)
        scale = std[a] * np.sqrt(hilbert_dim) / norm if norm > 0 else 0.0
        observables.append(scale * h + mean[a] * identity)
    return MatrixConfiguration(np.stack(observables))


def _epoch(cfg, rows, tc, optimizer, rng, workers):
    order = rng.permutation(len(rows))
    total, count, skipped = 0.0, 0, 0
    observables = cfg.observables
    for start in range(0, len(rows), tc.batch_size):
        batch = rows[order[start : start + tc.batch_size]]
        evaluation = loss_and_gradient(
            cfg,
            batch,
            tc.fluctuation_weight,
            workers=workers,
            deterministic_reduction=tc.deterministic_reduction,
        )
        total += evaluation.loss
        count += evaluation.count
        skipped += evaluation.skipped
        if evaluation.count == 0:
            continue
        observables = optimizer.step(
            cfg.observables, evaluation.gradient / evaluation.count
        )
        cfg = MatrixConfiguration(hermitian_part(observables))
    mean_loss = total / count if count else float('nan')
    return cfg, mean_loss, skipped


def train(data, tc=None, initial=None):
    """
    Fits a matrix configuration to ``data`` with mini-batch Adam.

    Every mini-batch recomputes the quasi-coherent states of its rows before
    the loss and gradient are evaluated.
    """
    tc = tc or TrainingConfig()
    rows = np.atleast_2d(np.asarray(getattr(data, 'rows', data), dtype=np.float64))
    if rows.size == 0:
        raise ValidationError('training data must not be empty')
    if not np.all(np.isfinite(rows)):
        raise ValidationError('training data contains NaN or Inf')
    feature_dim = rows.shape[1]
    cfg = initial or initialize(tc.hilbert_dim, feature_dim, rows, tc.seed)
    if cfg.feature_dim != feature_dim:
        raise ValidationError('initial configuration does not match the data')

    optimizer = AdamOptimizer(
        lr=tc.learning_rate,
        beta1=tc.adam_beta1,
        beta2=tc.adam_beta2,
        epsilon=tc.adam_epsilon,
    )
    rng = np.random.default_rng(tc.seed)
    workers = tc.threads or 1
    report = TrainingReport()
    started = time.perf_counter()

    with threadpool_limits(limits=tc.threads):
        for epoch in range(1, tc.epochs + 1):
            cfg, epoch_loss, skipped = _epoch(cfg, rows, tc, optimizer, rng, workers)
            if skipped == len(rows):
                raise ValidationError(
                    'no usable points remain, the ground state is degenerate '
                    'at every data point'
                )
            if not np.isfinite(epoch_loss):
                raise TrainingDivergedError(epoch, epoch_loss)
            report.epoch_losses.append(epoch_loss)
            report.skipped_points += skipped
            if epoch % tc.log_every == 0 or epoch == tc.epochs:
                logger.info(
                    'training epoch', epoch=epoch, loss=epoch_loss, skipped=skipped
                )
            if (
                tc.checkpoint_every
                and tc.checkpoint_path
                and epoch % tc.checkpoint_every == 0
            ):
                cfg.save(tc.checkpoint_path)
                logger.debug(
                    'checkpoint written', epoch=epoch, path=str(tc.checkpoint_path)
                )

        final = loss_and_gradient(cfg, rows, tc.fluctuation_weight)
    report.final_loss = max(final.loss / final.count, 0.0) if final.count else 0.0
    report.wall_time = time.perf_counter() - started
    return cfg, report


def alpha_scan(spin, data, fluctuation_weight, alphas):
    """
    Mean per-point loss of ``alpha * J`` for every ``alpha`` in ``alphas``.

    Returns the losses and the grid value with the smallest loss.
    """
    if not isinstance(spin, SpinLabel):
        spin = SpinLabel(int(spin))
    alphas = np.asarray(alphas, dtype=np.float64)
    losses = np.empty_like(alphas)
    for i, alpha in enumerate(alphas):
        evaluation = loss_and_gradient(
            fuzzy_sphere(spin, alpha), data, fluctuation_weight
        )
        losses[i] = evaluation.loss / max(evaluation.count, 1)
    return losses, float(alphas[np.argmin(losses)])


@dataclass(frozen=True, eq=False)
class SphereAlignment:
    generators: np.ndarray
    orientation: int
    commutator_defect: float
    casimir_defect: float
    j3_spectrum: np.ndarray


_LEVI_CIVITA_PAIRS = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def _su2_defects(generators, j):
    commutator_defect = max(
        float(
            np.linalg.norm(
                generators[a] @ generators[b]
                - generators[b] @ generators[a]
                - 1j * generators[c]
            )
        )
        for a, b, c in _LEVI_CIVITA_PAIRS
    )
    casimir = np.einsum('aij,ajk->ik', generators, generators)
    casimir_defect = float(
        np.linalg.norm(casimir - j * (j + 1) * np.eye(generators.shape[1]))
    )
    return commutator_defect, casimir_defect


def align_sphere_generators(cfg, fluctuation_weight):
    """
    Rescales a learned D = 3 configuration to approximate spin generators.

    ``J_a = s (j + w) X_a`` with the trace part removed. The sign ``s`` picks
    the handedness; the defects are invariant under proper rotations of the
    feature axes and under unitary conjugation, so no further gauge is fixed.
    """
    if cfg.feature_dim != 3:
        raise ValidationError('sphere alignment needs a D = 3 configuration')
    n = cfg.hilbert_dim
    j = (n - 1) / 2
    x = np.array(cfg.observables)
    traces = np.trace(x, axis1=1, axis2=2).real / n
    x = x - traces[:, None, None] * np.eye(n)

    best = None
    for orientation in (-1, 1):
        generators = orientation * (j + fluctuation_weight) * x
        commutator_defect, casimir_defect = _su2_defects(generators, j)
        if best is None or commutator_defect < best.commutator_defect:
            best = SphereAlignment(
                generators=generators,
                orientation=orientation,
                commutator_defect=commutator_defect,
                casimir_defect=casimir_defect,
                j3_spectrum=np.linalg.eigvalsh(generators[2]),
            )
    return best
