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
"""Data types of the interacting-particle attention model and its forward operator."""

import hashlib
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import torch

from attnkernel.bspline import SplineKernel, smoothness_of_degree
from attnkernel.utils.common import DTYPE, as_tensor, bilinear_scores, op_norm

# slack for float spill when checking support bounds
BOUND_TOL = 1e-12


@dataclass(frozen=True)
class TokenBatch:
    """M samples of N tokens in [0, 1/sqrt(d)]^d, shape (M, N, d)."""
    tokens: torch.Tensor

    def __post_init__(self):
        if self.tokens.dim() != 3:
            raise ValueError('tokens must have shape (M, N, d), got {}'.format(tuple(self.tokens.shape)))
        upper = 1.0 / math.sqrt(self.d)
        if self.tokens.numel() > 0 and (self.tokens.min() < -BOUND_TOL or self.tokens.max() > upper + BOUND_TOL):
            raise ValueError('token coordinates must lie in [0, {:.6f}]'.format(upper))

    @property
    def M(self) -> int:
        return self.tokens.shape[0]

    @property
    def N(self) -> int:
        return self.tokens.shape[1]

    @property
    def d(self) -> int:
        return self.tokens.shape[2]

    def permuted(self, perm: torch.Tensor) -> 'TokenBatch':
        """Same samples with token indices permuted by ``perm`` (length N)."""
        return TokenBatch(self.tokens[:, perm])


@dataclass(frozen=True)
class InteractionMatrix:
    """d x d score matrix A with operator-norm bound a_bar.

    When ``rank_bound`` is set the matrix is held as factors Q K^T of width r.
    """
    entries: torch.Tensor
    op_norm_bound: float = 1.0
    rank_bound: Optional[int] = None
    factors: Optional[Tuple[torch.Tensor, torch.Tensor]] = None

    def __post_init__(self):
        if self.entries.dim() != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError('interaction matrix must be square, got {}'.format(tuple(self.entries.shape)))
        if not self.op_norm_bound > 0:
            raise ValueError('op_norm_bound must be positive, got {}'.format(self.op_norm_bound))
        if self.rank_bound is not None:
            if self.rank_bound < 2:
                raise ValueError('rank bound must be >= 2, got {}'.format(self.rank_bound))
            if self.factors is None or self.factors[0].shape[1] != self.rank_bound:
                raise ValueError('rank-bounded matrix needs factors of width {}'.format(self.rank_bound))

    @classmethod
    def from_factors(cls, q: torch.Tensor, k: torch.Tensor, op_norm_bound: float = 1.0) -> 'InteractionMatrix':
        return cls(q @ k.T, op_norm_bound, q.shape[1], (q, k))

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def op_norm(self) -> float:
        return op_norm(self.entries)

    @property
    def within_bound(self) -> bool:
        return self.op_norm <= self.op_norm_bound + 1e-6

    def validate(self) -> 'InteractionMatrix':
        if not self.within_bound:
            raise ValueError('||A||_op = {:.6g} exceeds bound {}'.format(self.op_norm, self.op_norm_bound))
        return self

    def projected(self) -> 'InteractionMatrix':
        """Rescale onto the operator-norm ball when outside it."""
        norm = self.op_norm
        if norm <= self.op_norm_bound:
            return self
        scale = self.op_norm_bound / norm
        if self.factors is not None:
            s = math.sqrt(scale)
            return InteractionMatrix.from_factors(self.factors[0] * s, self.factors[1] * s, self.op_norm_bound)
        return InteractionMatrix(self.entries * scale, self.op_norm_bound)

    def to_dict(self) -> dict:
        d = {'entries': self.entries.reshape(-1).tolist(), 'd': self.d,
             'op_norm_bound': self.op_norm_bound, 'rank_bound': self.rank_bound}
        if self.factors is not None:
            d['factors'] = [self.factors[0].tolist(), self.factors[1].tolist()]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> 'InteractionMatrix':
        if d.get('factors') is not None:
            q, k = (torch.tensor(f, dtype=DTYPE) for f in d['factors'])
            return cls.from_factors(q, k, d['op_norm_bound'])
        entries = torch.tensor(d['entries'], dtype=DTYPE).reshape(d['d'], d['d'])
        return cls(entries, d['op_norm_bound'])


@dataclass(frozen=True)
class GroundTruth:
    kernel: SplineKernel
    matrix: InteractionMatrix

    @property
    def degree(self) -> int:
        return self.kernel.degree

    @property
    def smoothness(self) -> int:
        return smoothness_of_degree(self.degree)

    @property
    def identifier(self) -> str:
        h = hashlib.sha1()
        h.update(self.kernel.theta.numpy().tobytes())
        h.update(self.matrix.entries.numpy().tobytes())
        return 'truth-{}'.format(h.hexdigest()[:12])

    def to_dict(self) -> dict:
        return {'kernel': self.kernel.to_dict(), 'matrix': self.matrix.to_dict(),
                'degree': self.degree, 'smoothness': self.smoothness, 'identifier': self.identifier}

    @classmethod
    def from_dict(cls, d: dict) -> 'GroundTruth':
        return cls(SplineKernel.from_dict(d['kernel']), InteractionMatrix.from_dict(d['matrix']))


@dataclass(frozen=True)
class Dataset:
    tokens: TokenBatch
    responses: torch.Tensor
    noise_sd: float = 0.0
    seed: Optional[int] = None
    truth_id: Optional[str] = None

    def __post_init__(self):
        if tuple(self.responses.shape) != (self.tokens.M, self.tokens.N):
            raise ValueError('responses shape {} does not match tokens (M, N) = ({}, {})'.format(
                tuple(self.responses.shape), self.tokens.M, self.tokens.N))
        if self.noise_sd < 0:
            raise ValueError('noise_sd must be >= 0, got {}'.format(self.noise_sd))

    @property
    def M(self) -> int:
        return self.tokens.M

    @property
    def N(self) -> int:
        return self.tokens.N

    @property
    def d(self) -> int:
        return self.tokens.d


MatrixLike = Union[InteractionMatrix, torch.Tensor]


def matrix_entries(matrix: MatrixLike) -> torch.Tensor:
    if isinstance(matrix, InteractionMatrix):
        return matrix.entries
    return as_tensor(matrix)


def pairwise_interactions(kernel: SplineKernel, matrix: MatrixLike, tokens) -> torch.Tensor:
    """phi(X_i^T A X_j) for all (i, j); the diagonal is zeroed.

    Args:
        tokens: (..., N, d) tensor or TokenBatch.

    Returns:
        torch.Tensor: (..., N, N)
    """
    if isinstance(tokens, TokenBatch):
        tokens = tokens.tokens
    scores = bilinear_scores(as_tensor(tokens), matrix_entries(matrix))
    n = scores.shape[-1]
    offdiag = 1.0 - torch.eye(n, dtype=DTYPE)
    return kernel(scores) * offdiag


def forward_operator(kernel: SplineKernel, matrix: MatrixLike, tokens) -> torch.Tensor:
    """R_g[X]_i = 1/(N-1) sum_{j != i} phi(X_i^T A X_j).

    Args:
        kernel (SplineKernel): phi.
        matrix: A.
        tokens: a single (N, d) array, a batch (..., N, d) or a TokenBatch.

    Returns:
        torch.Tensor: (..., N)
    """
    interactions = pairwise_interactions(kernel, matrix, tokens)
    n = interactions.shape[-1]
    if n < 2:
        raise ValueError('forward operator needs N >= 2 tokens, got {}'.format(n))
    return interactions.sum(dim=-1) / (n - 1)
