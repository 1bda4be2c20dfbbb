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
"""A-step: full-batch first-order descent on the interaction matrix.

The data term is differentiated analytically through the spline,

    d loss / dA = 2 / (M N (N-1)) sum_{m,i} r_i sum_{j != i} phi'(X_i^T A X_j) X_i X_j^T + lambda_A A,

with r_i the residual of the 1/(N-1)-normalized forward operator.
"""

import logging
import math
from typing import List, Optional, Tuple

import torch

from attnkernel.bspline import SplineKernel
from attnkernel.datagen.model import Dataset, InteractionMatrix, MatrixLike, matrix_entries
from attnkernel.estimator.config import FitConfig
from attnkernel.utils.common import bilinear_scores
from attnkernel.utils.executor import Executor
from attnkernel.utils.train_utils import init_optimizer


def residuals(dataset: Dataset, matrix: MatrixLike, kernel: SplineKernel) -> Tuple[torch.Tensor, torch.Tensor]:
    """Residuals R[X]_i - Y_i of shape (M, N) and the scores X_i^T A X_j."""
    tokens = dataset.tokens.tokens
    N = tokens.shape[1]
    scores = bilinear_scores(tokens, matrix_entries(matrix))
    offdiag = 1.0 - torch.eye(N, dtype=scores.dtype)
    pred = (kernel(scores) * offdiag).sum(dim=-1) / (N - 1)
    return pred - dataset.responses, scores


def training_loss(dataset: Dataset, matrix: MatrixLike, kernel: SplineKernel, matrix_penalty: float = 0.0) -> float:
    """(1/(M N)) sum (R[X]_i - Y_i)^2 + (lambda_A / 2) ||A||_F^2"""
    resid, _ = residuals(dataset, matrix, kernel)
    entries = matrix_entries(matrix)
    return (resid.pow(2).mean() + 0.5 * matrix_penalty * entries.pow(2).sum()).item()


def loss_and_grad_A(dataset: Dataset, matrix: MatrixLike, kernel: SplineKernel,
                    matrix_penalty: float = 0.0) -> Tuple[float, torch.Tensor]:
    """Training loss and its exact gradient with respect to A.

    Args:
        dataset (Dataset): training data.
        matrix: current A.
        kernel (SplineKernel): current phi, degree >= 1.
        matrix_penalty (float): lambda_A.

    Returns:
        float: loss.
        torch.Tensor: (d, d) gradient.
    """
    if kernel.degree < 1:
        raise ValueError('A-step needs a kernel of degree >= 1, got {}'.format(kernel.degree))
    entries = matrix_entries(matrix)
    tokens = dataset.tokens.tokens
    M, N, _ = tokens.shape
    resid, scores = residuals(dataset, entries, kernel)
    offdiag = 1.0 - torch.eye(N, dtype=scores.dtype)
    weights = resid.unsqueeze(-1) * kernel.derivative()(scores) * offdiag
    grad = 2.0 / (M * N * (N - 1)) * torch.einsum('mij,mid,mje->de', weights, tokens, tokens)
    loss = resid.pow(2).mean() + 0.5 * matrix_penalty * entries.pow(2).sum()
    return loss.item(), grad + matrix_penalty * entries


def a_step(dataset: Dataset, matrix_init: InteractionMatrix, kernel: SplineKernel, config: FitConfig,
           executor: Optional[Executor] = None, writer=None) -> InteractionMatrix:
    """Run ``config.a_step.epochs`` optimizer steps from ``matrix_init``.

    Rank-bounded matrices are optimized through their factors Q, K with
    dL/dQ = G K and dL/dK = G^T Q, G the gradient with respect to A = Q K^T.

    Raises:
        NonFiniteLossError: the loss or gradient became non-finite.
    """
    a_conf = config.a_step
    executor = executor or Executor()
    bound = matrix_init.op_norm_bound
    low_rank = matrix_init.factors is not None
    if low_rank:
        params = [matrix_init.factors[0].clone(), matrix_init.factors[1].clone()]
    else:
        params = [matrix_init.entries.clone()]
    for p in params:
        p.requires_grad_(True)

    def current() -> torch.Tensor:
        return params[0] @ params[1].T if low_rank else params[0]

    def loss_and_grad() -> Tuple[float, List[torch.Tensor]]:
        with torch.no_grad():
            loss, grad = loss_and_grad_A(dataset, current(), kernel, config.matrix_penalty)
            if low_rank:
                return loss, [grad @ params[1], grad.T @ params[0]]
            return loss, [grad]

    def project():
        with torch.no_grad():
            norm = torch.linalg.matrix_norm(current(), ord=2).item()
            if norm > bound:
                scale = bound / norm
                if low_rank:
                    for p in params:
                        p.mul_(math.sqrt(scale))
                else:
                    params[0].mul_(scale)
                logging.debug('projected A onto the operator-norm ball, ||A||_op was {:.6e}'.format(norm))

    optimizer = init_optimizer(a_conf, params)
    info_dict = {'epochs': a_conf.epochs, 'log_interval': a_conf.log_interval}
    executor.train_one_round(params, loss_and_grad, optimizer, writer, info_dict,
                             project if a_conf.project else None)
    with torch.no_grad():
        if low_rank:
            return InteractionMatrix.from_factors(params[0].detach().clone(), params[1].detach().clone(), bound)
        return InteractionMatrix(params[0].detach().clone(), bound)
