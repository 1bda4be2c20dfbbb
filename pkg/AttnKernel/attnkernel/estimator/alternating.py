# Copyright (c) 2026 The attnkernel Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Alternating estimator: hot start, then T rounds of (A-step, theta-step)."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Union

import torch

from attnkernel.bspline import SplineKernel, build_knots
from attnkernel.datagen.model import Dataset, GroundTruth, InteractionMatrix
from attnkernel.estimator.a_step import a_step, training_loss
from attnkernel.estimator.config import FitConfig
from attnkernel.estimator.ridge import condition_estimate, design_matrix, ridge_objective, solve_theta
from attnkernel.utils.common import DTYPE, op_norm
from attnkernel.utils.errors import FitError
from attnkernel.utils.executor import Executor
from attnkernel.utils.train_utils import log_per_round

Hint = Union[GroundTruth, InteractionMatrix, torch.Tensor]


@dataclass
class FitResult:
    kernel: SplineKernel
    matrix: InteractionMatrix
    trajectory: List[float]
    diagnostics: dict = field(default_factory=dict)
    config: Optional[dict] = None
    seed: Optional[int] = None

    @property
    def rounds(self) -> int:
        return len(self.trajectory) - 1

    def to_dict(self) -> dict:
        return {'kernel': self.kernel.to_dict(), 'matrix': self.matrix.to_dict(),
                'trajectory': list(self.trajectory), 'diagnostics': self.diagnostics,
                'config': self.config, 'seed': self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> 'FitResult':
        return cls(SplineKernel.from_dict(d['kernel']), InteractionMatrix.from_dict(d['matrix']),
                   list(d['trajectory']), d.get('diagnostics', {}), d.get('config'), d.get('seed'))


def _hint_matrix(hint: Optional[Hint]) -> Optional[InteractionMatrix]:
    if hint is None or isinstance(hint, InteractionMatrix):
        return hint
    if isinstance(hint, GroundTruth):
        return hint.matrix
    return InteractionMatrix(hint.to(DTYPE))


def _factorize(entries: torch.Tensor, rank: int, bound: float) -> InteractionMatrix:
    """Best rank-r factors Q = U_r S_r^{1/2}, K = V_r S_r^{1/2}."""
    u, s, vh = torch.linalg.svd(entries)
    root = s[:rank].sqrt()
    return InteractionMatrix.from_factors(u[:, :rank] * root, vh[:rank].T * root, bound)


def initial_matrix(config: FitConfig, d: int, hint: Optional[Hint] = None,
                   generator: Optional[torch.Generator] = None) -> InteractionMatrix:
    """A^(0) per the hot-start settings.

    Raises:
        ValueError: hot start without a hint or explicit initial matrix.
    """
    hs = config.hot_start
    bound = config.op_norm_bound
    if generator is None:
        generator = torch.Generator().manual_seed(0)
    if hs.initial_matrix is not None:
        entries = torch.tensor(hs.initial_matrix, dtype=DTYPE)
        if entries.shape != (d, d):
            raise ValueError('initial_matrix must be {}x{}, got {}'.format(d, d, tuple(entries.shape)))
    elif hs.mode == 'hot':
        truth = _hint_matrix(hint)
        if truth is None:
            raise ValueError('hot start needs the ground-truth matrix or an explicit initial_matrix')
        if truth.d != d:
            raise ValueError('hint matrix is {}x{} but data has d={}'.format(truth.d, truth.d, d))
        sd = hs.sd_for(d)
        if truth.factors is not None and config.rank_bound == truth.rank_bound:
            q, k = truth.factors
            q = q + sd * torch.randn(q.shape, generator=generator, dtype=DTYPE)
            k = k + sd * torch.randn(k.shape, generator=generator, dtype=DTYPE)
            return InteractionMatrix.from_factors(q, k, bound)
        entries = truth.entries + sd * torch.randn(d, d, generator=generator, dtype=DTYPE)
    else:
        entries = torch.randn(d, d, generator=generator, dtype=DTYPE)
        entries = entries * (0.5 * bound / op_norm(entries))
    if config.rank_bound is not None and config.rank_bound < d:
        return _factorize(entries, config.rank_bound, bound)
    return InteractionMatrix(entries, bound)


def fit(dataset: Dataset, config: FitConfig, ground_truth_hint: Optional[Hint] = None,
        generator: Optional[torch.Generator] = None, writer=None, seed: Optional[int] = None) -> FitResult:
    """Fit (phi_hat, A_hat) by alternating minimization.

    Round 0 solves theta at the start matrix; each of the ``config.rounds``
    following rounds runs the A-step and then re-solves theta.

    Args:
        dataset (Dataset): training data.
        config (FitConfig): estimator settings.
        ground_truth_hint: A* (or the GroundTruth holding it) for hot start.
        generator (torch.Generator): stream for the hot-start perturbation.
        writer: optional tensorboard SummaryWriter.
        seed (int): provenance echoed into the result.

    Returns:
        FitResult: estimate with trajectory of length rounds + 1.

    Raises:
        FitError: any failure, tagged with the round it happened in.
    """
    knots = build_knots(config.degree, config.basis_size, config.domain)
    y = dataset.responses.reshape(-1)
    diagnostics = {'solver': [], 'ridge_objective': []}
    executor = Executor()

    round_index = 0
    try:
        matrix = initial_matrix(config, dataset.d, ground_truth_hint, generator)
        design = design_matrix(dataset, matrix, knots)
        theta, method = solve_theta(design, y, config.ridge)
        kernel = SplineKernel(knots, theta)
        trajectory = [training_loss(dataset, matrix, kernel, config.matrix_penalty)]
        diagnostics['solver'].append(method)
        logging.info('Round 0 hot start mode {} loss {:.6e}'.format(config.hot_start.mode, trajectory[0]))

        for round_index in range(1, config.rounds + 1):
            executor.round = round_index
            matrix = a_step(dataset, matrix, kernel, config, executor, writer)
            design = design_matrix(dataset, matrix, knots)
            before = ridge_objective(design, y, kernel.theta, config.ridge)
            theta, method = solve_theta(design, y, config.ridge)
            after = ridge_objective(design, y, theta, config.ridge)
            kernel = SplineKernel(knots, theta)
            trajectory.append(training_loss(dataset, matrix, kernel, config.matrix_penalty))
            diagnostics['solver'].append(method)
            diagnostics['ridge_objective'].append([before, after])
            log_per_round(writer, {'round': round_index, 'objective_before': before, 'objective_after': after,
                                   'solver': method, 'loss': trajectory[-1]})
        diagnostics['condition'] = condition_estimate(design, config.ridge)
    except FitError:
        raise
    except (RuntimeError, ValueError, FloatingPointError) as e:
        raise FitError('{}: {}'.format(type(e).__name__, e), round_index) from e

    diagnostics['rounds'] = config.rounds
    diagnostics['matrix_op_norm'] = matrix.op_norm
    diagnostics['within_bound'] = matrix.within_bound
    return FitResult(kernel, matrix, trajectory, diagnostics, config.model_dump(), seed)


def fit_known_matrix(dataset: Dataset, matrix: Hint, config: FitConfig,
                     seed: Optional[int] = None) -> FitResult:
    """Oracle baseline: theta by ridge regression with A fixed at the true matrix."""
    matrix = _hint_matrix(matrix)
    knots = build_knots(config.degree, config.basis_size, config.domain)
    try:
        design = design_matrix(dataset, matrix, knots)
        theta, method = solve_theta(design, dataset.responses.reshape(-1), config.ridge)
    except (RuntimeError, ValueError) as e:
        raise FitError('{}: {}'.format(type(e).__name__, e), 0) from e
    kernel = SplineKernel(knots, theta)
    diagnostics = {'solver': [method], 'rounds': 0, 'condition': condition_estimate(design, config.ridge),
                   'known_matrix': True}
    return FitResult(kernel, matrix, [training_loss(dataset, matrix, kernel, config.matrix_penalty)],
                     diagnostics, config.model_dump(), seed)
