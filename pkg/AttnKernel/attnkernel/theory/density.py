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
"""Histogram estimate of the density p_U of the bilinear score U = X_i^T A X_j."""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import torch

from attnkernel.datagen.model import InteractionMatrix, TokenBatch
from attnkernel.utils.common import DTYPE, bilinear_scores

MIN_PAIRS_PER_BIN = 10


@dataclass(frozen=True)
class DensityEstimate:
    """Bin masses over [-a_bar, a_bar], a probability vector."""
    edges: torch.Tensor
    masses: torch.Tensor
    count: int

    def __post_init__(self):
        if self.edges.numel() != self.masses.numel() + 1:
            raise ValueError('need len(edges) == len(masses) + 1')
        if not (self.edges[1:] > self.edges[:-1]).all():
            raise ValueError('bin edges must be strictly increasing')
        if (self.masses < 0).any() or abs(self.masses.sum().item() - 1.0) > 1e-12:
            raise ValueError('bin masses must be non-negative and sum to 1')

    @classmethod
    def uniform(cls, bins: int, domain: Tuple[float, float] = (-1.0, 1.0)) -> 'DensityEstimate':
        edges = torch.linspace(domain[0], domain[1], bins + 1, dtype=DTYPE)
        return cls(edges, torch.full((bins,), 1.0 / bins, dtype=DTYPE), 0)

    @property
    def bins(self) -> int:
        return self.masses.numel()

    @property
    def domain(self) -> Tuple[float, float]:
        return self.edges[0].item(), self.edges[-1].item()

    @property
    def widths(self) -> torch.Tensor:
        return self.edges[1:] - self.edges[:-1]

    @property
    def density(self) -> torch.Tensor:
        return self.masses / self.widths

    def __call__(self, u) -> torch.Tensor:
        """Piecewise-constant density; zero outside the domain."""
        u = torch.as_tensor(u, dtype=DTYPE)
        idx = (torch.searchsorted(self.edges, u, right=True) - 1).clamp(0, self.bins - 1)
        inside = (u >= self.edges[0]) & (u <= self.edges[-1])
        return torch.where(inside, self.density[idx], torch.zeros_like(u))

    def runs_above(self, floor: float) -> List[Tuple[float, float]]:
        """Maximal runs of consecutive bins whose density exceeds ``floor``."""
        above = (self.density > floor).tolist()
        runs, start = [], None
        for b, flag in enumerate(above + [False]):
            if flag and start is None:
                start = b
            elif not flag and start is not None:
                runs.append((self.edges[start].item(), self.edges[b].item()))
                start = None
        return runs

    def to_dict(self) -> dict:
        density = self.density
        return {'bins': self.bins, 'count': self.count, 'domain': list(self.domain),
                'max_density': density.max().item(), 'mean_density': density.mean().item(),
                'edges': self.edges.tolist(), 'masses': self.masses.tolist()}


def pair_scores(tokens, matrix) -> torch.Tensor:
    """All off-diagonal X_i^T A X_j, flattened."""
    if isinstance(tokens, TokenBatch):
        tokens = tokens.tokens
    entries = matrix.entries if isinstance(matrix, InteractionMatrix) else matrix
    scores = bilinear_scores(tokens, entries)
    N = scores.shape[-1]
    mask = ~torch.eye(N, dtype=torch.bool).expand_as(scores)
    return scores[mask]


def estimate_pU(tokens: TokenBatch, matrix: InteractionMatrix, bins: Optional[int] = None) -> DensityEstimate:
    """Histogram of pooled off-diagonal scores on [-a_bar, a_bar].

    Args:
        tokens (TokenBatch): exchangeable token samples.
        matrix (InteractionMatrix): A*; its bound sets the domain.
        bins (int): bin count, ceil(sqrt(pairs)) when omitted.
    """
    values = pair_scores(tokens, matrix).numpy()
    if bins is None:
        bins = max(2, math.ceil(math.sqrt(values.size)))
    if bins < 2:
        raise ValueError('need at least 2 bins, got {}'.format(bins))
    if values.size < MIN_PAIRS_PER_BIN * bins:
        raise ValueError('{} pairs are too few for {} bins, need {}'.format(
            values.size, bins, MIN_PAIRS_PER_BIN * bins))
    bound = matrix.op_norm_bound
    # |U| <= ||A||_op <= a_bar up to float spill
    counts, edges = np.histogram(np.clip(values, -bound, bound), bins=bins, range=(-bound, bound))
    masses = torch.from_numpy(counts.astype(np.float64) / counts.sum())
    return DensityEstimate(torch.from_numpy(edges).to(DTYPE), masses, int(values.size))
