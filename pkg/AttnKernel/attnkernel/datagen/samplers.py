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
"""Token, noise and interaction-matrix samplers.

Every sampler draws only from the generator it is given.
"""

import math
from typing import Optional, Tuple

import torch

from attnkernel.datagen.model import InteractionMatrix
from attnkernel.utils.common import DTYPE, op_norm


def uniform_tokens(generator: torch.Generator, M: int, N: int, d: int) -> torch.Tensor:
    """X_i ~ Unif[0,1]^d / sqrt(d), i.i.d."""
    return torch.rand(M, N, d, generator=generator, dtype=DTYPE) / math.sqrt(d)


def shared_latent_tokens(generator: torch.Generator, M: int, N: int, d: int,
                         weight: float = 0.5) -> torch.Tensor:
    """Exchangeable but dependent tokens: a per-sample latent shared by all N tokens.

    X_i = (w Z + (1 - w) E_i) / sqrt(d) with Z, E_i ~ Unif[0,1]^d.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError('latent weight must be in [0, 1], got {}'.format(weight))
    latent = torch.rand(M, 1, d, generator=generator, dtype=DTYPE)
    own = torch.rand(M, N, d, generator=generator, dtype=DTYPE)
    return (weight * latent + (1.0 - weight) * own) / math.sqrt(d)


def gaussian_noise(generator: torch.Generator, shape: Tuple[int, ...], sd: float) -> torch.Tensor:
    return sd * torch.randn(*shape, generator=generator, dtype=DTYPE)


def uniform_noise(generator: torch.Generator, shape: Tuple[int, ...], sd: float) -> torch.Tensor:
    """Bounded noise on [-sqrt(3) sd, sqrt(3) sd], variance sd^2."""
    return sd * math.sqrt(3.0) * (2.0 * torch.rand(*shape, generator=generator, dtype=DTYPE) - 1.0)


def diagonal_matrix(generator: torch.Generator, d: int, op_norm_bound: float = 1.0,
                    rank: Optional[int] = None) -> InteractionMatrix:
    """A_11 = 1, A_ii ~ Unif[-1, 1] for i > 1, scaled by the bound."""
    diag = torch.ones(d, dtype=DTYPE)
    if d > 1:
        diag[1:] = 2.0 * torch.rand(d - 1, generator=generator, dtype=DTYPE) - 1.0
    return InteractionMatrix(op_norm_bound * torch.diag(diag), op_norm_bound)


def low_rank_matrix(generator: torch.Generator, d: int, op_norm_bound: float = 1.0,
                    rank: Optional[int] = None) -> InteractionMatrix:
    """Gaussian factors Q, K of width r, rescaled so that ||Q K^T||_op = bound."""
    r = 2 if rank is None else rank
    q = torch.randn(d, r, generator=generator, dtype=DTYPE)
    k = torch.randn(d, r, generator=generator, dtype=DTYPE)
    s = math.sqrt(op_norm_bound / op_norm(q @ k.T))
    return InteractionMatrix.from_factors(q * s, k * s, op_norm_bound)
