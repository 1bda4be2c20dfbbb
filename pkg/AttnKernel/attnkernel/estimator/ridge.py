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
"""theta-step: closed-form spline-ridge regression with A held fixed."""

import logging
import math
from typing import Tuple

import torch

from attnkernel.bspline import KnotVector, basis_window
from attnkernel.datagen.model import Dataset, MatrixLike, matrix_entries
from attnkernel.utils.common import bilinear_scores, round_half_away
from attnkernel.utils.errors import GramFactorizationError

JITTER = 1e-10


def select_hyperparams(M: int, N: int, beta: float, K_scale: float = 16.0,
                       lambda_scale: float = 2.0) -> Tuple[int, float]:
    """K_est = round(K_scale (M / log M)^{1/(2 beta + 1)}), lambda = lambda_scale K_est / (M (N - 1)).

    Examples:
        >>> select_hyperparams(20000, 3, 2.0)[0]
        73
        >>> select_hyperparams(70000, 3, 2.0)[0]
        92

    """
    if M <= math.e:
        raise ValueError('M must exceed e so that log M > 1, got {}'.format(M))
    if not beta > 0:
        raise ValueError('beta must be positive, got {}'.format(beta))
    if N < 2:
        raise ValueError('N must be >= 2, got {}'.format(N))
    basis_size = round_half_away(K_scale * (M / math.log(M)) ** (1.0 / (2.0 * beta + 1.0)))
    ridge = lambda_scale * basis_size / (M * (N - 1))
    return basis_size, ridge


def design_matrix(dataset: Dataset, matrix: MatrixLike, knots: KnotVector) -> torch.Tensor:
    """U[(m, i), k] = 1/(N-1) sum_{j != i} B_k(X_i^T A X_j), shape (M N, K)."""
    tokens = dataset.tokens.tokens
    M, N, _ = tokens.shape
    if M == 0:
        raise ValueError('design matrix of an empty dataset')
    K, P = knots.basis_size, knots.degree
    scores = bilinear_scores(tokens, matrix_entries(matrix))
    first, values = basis_window(knots, scores)
    offdiag = (1.0 - torch.eye(N, dtype=values.dtype)).unsqueeze(-1)
    values = values * offdiag
    rows = torch.arange(M * N).reshape(M, N, 1, 1)
    cols = first.unsqueeze(-1) + torch.arange(P + 1)
    flat = (rows * K + cols).reshape(-1)
    out = values.new_zeros(M * N * K)
    out.index_add_(0, flat, values.reshape(-1))
    return out.reshape(M * N, K) / (N - 1)


def gram(design: torch.Tensor, ridge: float) -> torch.Tensor:
    g = design.T @ design
    return g + ridge * torch.eye(g.shape[0], dtype=g.dtype)


def ridge_solve(design: torch.Tensor, responses: torch.Tensor, ridge: float) -> torch.Tensor:
    """theta = (U^T U + lambda I)^{-1} U^T y by Cholesky.

    Raises:
        GramFactorizationError: the Gram matrix is not numerically positive definite.
    """
    if ridge < 0:
        raise ValueError('ridge must be >= 0, got {}'.format(ridge))
    y = responses.reshape(-1)
    if design.shape[0] != y.shape[0]:
        raise ValueError('design has {} rows but {} responses'.format(design.shape[0], y.shape[0]))
    chol, info = torch.linalg.cholesky_ex(gram(design, ridge))
    if info.item() != 0 or not torch.isfinite(chol).all():
        raise GramFactorizationError('Gram matrix factorization failed at leading minor {}'.format(info.item()))
    return torch.cholesky_solve((design.T @ y).unsqueeze(-1), chol).squeeze(-1)


def solve_theta(design: torch.Tensor, responses: torch.Tensor, ridge: float) -> Tuple[torch.Tensor, str]:
    """ridge_solve with a jitter retry and a least-squares fallback.

    Returns:
        torch.Tensor: theta.
        str: method that succeeded, one of ``cholesky``, ``jitter``, ``lstsq``.
    """
    try:
        return ridge_solve(design, responses, ridge), 'cholesky'
    except GramFactorizationError as e:
        jitter = JITTER * torch.trace(design.T @ design).item() / design.shape[1]
        logging.warning('{}, retrying with jitter {:.3e}'.format(e, jitter))
    try:
        return ridge_solve(design, responses, ridge + jitter), 'jitter'
    except GramFactorizationError as e:
        logging.warning('{}, falling back to least squares'.format(e))
    K = design.shape[1]
    augmented = torch.cat([design, math.sqrt(ridge) * torch.eye(K, dtype=design.dtype)])
    target = torch.cat([responses.reshape(-1), responses.new_zeros(K)])
    return torch.linalg.lstsq(augmented, target.unsqueeze(-1), driver='gelsd').solution.squeeze(-1), 'lstsq'


def ridge_objective(design: torch.Tensor, responses: torch.Tensor, theta: torch.Tensor, ridge: float) -> float:
    """||U theta - y||^2 + lambda ||theta||^2"""
    resid = design @ theta - responses.reshape(-1)
    return (resid @ resid + ridge * theta @ theta).item()


def condition_estimate(design: torch.Tensor, ridge: float) -> float:
    return torch.linalg.cond(gram(design, ridge)).item()
