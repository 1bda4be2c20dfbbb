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
"""Sampling ground truths and synthetic datasets.

Y_i = 1/(N-1) sum_{j != i} phi*(X_i^T A* X_j) + eta_i
"""

import logging
import math
from typing import Optional

import torch

from attnkernel.bspline import SplineKernel, build_knots
from attnkernel.datagen.model import (BOUND_TOL, Dataset, GroundTruth, TokenBatch,
                                      forward_operator)
from attnkernel.utils.class_utils import (ATTNKERNEL_MATRIX_SCHEMES, ATTNKERNEL_NOISE_SAMPLERS,
                                          ATTNKERNEL_TOKEN_SAMPLERS, lookup)
from attnkernel.utils.common import DTYPE, bilinear_scores


def sample_tokens(generator: torch.Generator, M: int, N: int, d: int,
                  sampler: str = 'uniform') -> TokenBatch:
    if N < 2:
        raise ValueError('need N >= 2 tokens per sample for off-diagonal pairs, got {}'.format(N))
    if M < 1 or d < 1:
        raise ValueError('need M >= 1 and d >= 1, got M={} d={}'.format(M, d))
    fn = lookup(ATTNKERNEL_TOKEN_SAMPLERS, sampler, 'token sampler')
    return TokenBatch(fn(generator, M, N, d))


def sample_ground_truth(generator: torch.Generator, d: int, degree: int, basis_size: int,
                        matrix_scheme: str = 'diagonal', op_norm_bound: float = 1.0,
                        rank: Optional[int] = None) -> GroundTruth:
    """Draw theta* ~ N(0, I), normalize to ||theta*|| = sqrt(K*), then draw A*."""
    knots = build_knots(degree, basis_size, (-op_norm_bound, op_norm_bound))
    theta = torch.randn(basis_size, generator=generator, dtype=DTYPE)
    theta = theta * (math.sqrt(basis_size) / torch.linalg.vector_norm(theta))
    scheme = lookup(ATTNKERNEL_MATRIX_SCHEMES, matrix_scheme, 'matrix scheme')
    matrix = scheme(generator, d, op_norm_bound, rank).validate()
    if d == 1 and matrix_scheme == 'diagonal':
        logging.warning('diagonal A* with d=1 has rank 1, below the rank >= 2 model class')
    return GroundTruth(SplineKernel(knots, theta), matrix)


def check_scores_bounded(tokens: TokenBatch, truth: GroundTruth):
    scores = bilinear_scores(tokens.tokens, truth.matrix.entries)
    worst = scores.abs().max().item()
    if worst > truth.matrix.op_norm + BOUND_TOL:
        raise ValueError('|X_i^T A X_j| = {:.6g} exceeds ||A||_op = {:.6g}'.format(worst, truth.matrix.op_norm))


def generate_dataset(generator: torch.Generator, ground_truth: GroundTruth, M: int, N: int, d: int,
                     noise_sd: float, token_sampler: str = 'uniform', noise: str = 'gaussian',
                     seed: Optional[int] = None, noise_generator: Optional[torch.Generator] = None) -> Dataset:
    """Tokens first, then noise; noise comes from ``noise_generator`` when given, else from ``generator``.

    Re-running with ``noise_sd=0`` and an identically seeded generator yields
    the same tokens and the clean responses.
    """
    if noise_sd < 0:
        raise ValueError('noise_sd must be >= 0, got {}'.format(noise_sd))
    if d != ground_truth.matrix.d:
        raise ValueError('d={} does not match the ground-truth matrix ({}x{})'.format(
            d, ground_truth.matrix.d, ground_truth.matrix.d))
    tokens = sample_tokens(generator, M, N, d, token_sampler)
    check_scores_bounded(tokens, ground_truth)
    clean = forward_operator(ground_truth.kernel, ground_truth.matrix, tokens)
    noise_fn = lookup(ATTNKERNEL_NOISE_SAMPLERS, noise, 'noise sampler')
    responses = clean + noise_fn(noise_generator or generator, (M, N), noise_sd) if noise_sd > 0 else clean
    return Dataset(tokens, responses, float(noise_sd), seed, ground_truth.identifier)


def clean_responses(dataset: Dataset, ground_truth: GroundTruth) -> torch.Tensor:
    return forward_operator(ground_truth.kernel, ground_truth.matrix, dataset.tokens)
