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
"""Common numeric helpers shared by all modules."""

import random
from typing import Sequence, Tuple

import numpy as np
import torch

DTYPE = torch.float64

# stream roles for SeedSequence spawn keys
ROLE_TRUTH = 0
ROLE_TRAIN_TOKENS = 1
ROLE_TRAIN_NOISE = 2
ROLE_TEST_TOKENS = 3
ROLE_HOT_START = 4
ROLE_THEORY = 5


def set_all_random_seed(seed):
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def spawn_generator(master_seed: int, role: int, *key: int) -> torch.Generator:
    """Build an independent torch generator for one (role, cell) stream.

    The seed is derived from ``numpy.random.SeedSequence`` with the spawn key
    ``(role, *key)``, so every stream depends only on the master seed and its
    key, never on the order in which streams are requested.

    Args:
        master_seed (int): experiment-wide seed.
        role (int): one of the ``ROLE_*`` constants.
        *key (int): cell coordinates, e.g. ``(d, M, seed_index)``.

    Returns:
        torch.Generator: CPU generator.

    Examples:
        >>> g1 = spawn_generator(1986, ROLE_TRUTH, 5, 0)
        >>> g2 = spawn_generator(1986, ROLE_TRUTH, 5, 0)
        >>> torch.equal(torch.rand(3, generator=g1), torch.rand(3, generator=g2))
        True

    """
    if master_seed < 0:
        raise ValueError('master seed must be non-negative, got {}'.format(master_seed))
    ss = np.random.SeedSequence(master_seed, spawn_key=(role, *[int(k) for k in key]))
    state = ss.generate_state(1, dtype=np.uint64)[0]
    generator = torch.Generator(device='cpu')
    generator.manual_seed(int(state) & 0x7fff_ffff_ffff_ffff)
    return generator


def offdiag_pairs(n: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """Row and column indices of all ordered pairs (i, j) with i != j."""
    rows, cols = torch.meshgrid(torch.arange(n), torch.arange(n), indexing='ij')
    mask = rows != cols
    return rows[mask], cols[mask]


def bilinear_scores(tokens: torch.Tensor, matrix: torch.Tensor) -> torch.Tensor:
    """All token scores X_i^T A X_j.

    Args:
        tokens (torch.Tensor): (..., N, d)
        matrix (torch.Tensor): (d, d)

    Returns:
        torch.Tensor: (..., N, N), entry [i, j] = X_i^T A X_j
    """
    return torch.einsum('...id,de,...je->...ij', tokens, matrix, tokens)


def op_norm(matrix: torch.Tensor) -> float:
    """Spectral norm (largest singular value)."""
    return torch.linalg.matrix_norm(matrix, ord=2).item()


def as_tensor(x, dtype: torch.dtype = DTYPE) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x.to(dtype)
    return torch.as_tensor(x, dtype=dtype)


def round_half_away(x: float) -> int:
    """Round to the nearest integer, ties away from zero."""
    return int(np.sign(x) * np.floor(abs(x) + 0.5))


def median_and_iqr(values: Sequence[float]) -> Tuple[float, float, float]:
    arr = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return float(med), float(q1), float(q3)
