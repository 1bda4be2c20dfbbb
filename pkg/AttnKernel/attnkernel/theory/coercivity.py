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
"""Monte-Carlo check of the coercivity inequality

    1/(N-1) ||g - g*||^2_{L^2(rho)} <= E_inf(g) - E_inf(g*) = (1/N) E ||R_{g - g*}[X]||^2.
"""

import math
from dataclasses import asdict, dataclass
from typing import Tuple

import torch

from attnkernel.bspline import SplineKernel
from attnkernel.datagen.model import MatrixLike, TokenBatch, pairwise_interactions

MIN_SAMPLES = 10000
SHARD_SIZE = 4096


@dataclass(frozen=True)
class CoercivityResult:
    lhs: float
    rhs: float
    margin: float
    margin_se: float
    samples: int

    @property
    def holds(self) -> bool:
        """margin >= -3 standard errors"""
        return self.margin >= -3.0 * self.margin_se

    def to_dict(self) -> dict:
        d = asdict(self)
        d['holds'] = self.holds
        return d


def per_sample_terms(g: Tuple[SplineKernel, MatrixLike], g_star: Tuple[SplineKernel, MatrixLike],
                     tokens: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Per-sample lhs and rhs summands, each of shape (M,)."""
    diff = pairwise_interactions(g[0], g[1], tokens) - pairwise_interactions(g_star[0], g_star[1], tokens)
    N = diff.shape[-1]
    R = diff.sum(dim=-1) / (N - 1)
    lhs = diff.pow(2).sum(dim=(-2, -1)) / (N * (N - 1)) / (N - 1)
    rhs = R.pow(2).mean(dim=-1)
    return lhs, rhs


def coercivity_check(g: Tuple[SplineKernel, MatrixLike], g_star: Tuple[SplineKernel, MatrixLike],
                     tokens: TokenBatch, min_samples: int = MIN_SAMPLES,
                     shard_size: int = SHARD_SIZE) -> CoercivityResult:
    """lhs, rhs and margin = rhs - lhs with its Monte-Carlo standard error.

    Samples are processed in shards of ``shard_size`` in a fixed order.
    """
    if tokens.M < min_samples:
        raise ValueError('coercivity check needs >= {} samples, got {}'.format(min_samples, tokens.M))
    if tokens.N < 2:
        raise ValueError('need N >= 2, got {}'.format(tokens.N))
    lhs_parts, rhs_parts = [], []
    for start in range(0, tokens.M, shard_size):
        lhs, rhs = per_sample_terms(g, g_star, tokens.tokens[start:start + shard_size])
        lhs_parts.append(lhs)
        rhs_parts.append(rhs)
    lhs, rhs = torch.cat(lhs_parts), torch.cat(rhs_parts)
    margin = rhs - lhs
    se = margin.std().item() / math.sqrt(margin.numel()) if margin.numel() > 1 else 0.0
    return CoercivityResult(lhs.mean().item(), rhs.mean().item(), margin.mean().item(), se, tokens.M)
