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
"""Minimum-distance hypothesis test on data simulated under each hypothesis.

Fano's inequality bounds the error of any test from below by
(log(K+1) - log 2) / log K - alpha; this is a demonstration, the bound is asymptotic.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import torch

from attnkernel.theory.hypotheses import HypothesisSet, hypothesis_operator
from attnkernel.utils.class_utils import ATTNKERNEL_TOKEN_SAMPLERS, lookup
from attnkernel.utils.common import DTYPE


@dataclass(frozen=True)
class FanoResult:
    trials: int
    errors: int
    error_rate: float
    alpha: float
    bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def fano_bound(count: int, alpha: float) -> float:
    K = count - 1
    if K < 2:
        return math.nan
    return (math.log(K + 1) - math.log(2)) / math.log(K) - alpha


def minimum_distance_error(hset: HypothesisSet, matrix, M: int, N: int, d: int, noise_sd: float,
                           alpha: float, trials: int = 100, generator: Optional[torch.Generator] = None,
                           sampler: str = 'uniform') -> FanoResult:
    """Empirical error of argmin_k ||Y - R_{phi_k}[X]|| when data come from a uniformly drawn hypothesis."""
    if trials < 1:
        raise ValueError('trials must be >= 1, got {}'.format(trials))
    if not noise_sd > 0:
        raise ValueError('noise_sd must be positive, got {}'.format(noise_sd))
    sample_tokens = lookup(ATTNKERNEL_TOKEN_SAMPLERS, sampler, 'token sampler')
    errors = 0
    for _ in range(trials):
        truth = int(torch.randint(0, hset.count, (1,), generator=generator).item())
        tokens = sample_tokens(generator, M, N, d)
        means = torch.stack([hypothesis_operator(hset, k, tokens, matrix) for k in range(hset.count)])
        y = means[truth] + noise_sd * torch.randn(M, N, generator=generator, dtype=DTYPE)
        decided = int((means - y).pow(2).sum(dim=(-2, -1)).argmin().item())
        errors += int(decided != truth)
    result = FanoResult(trials, errors, errors / trials, alpha, fano_bound(hset.count, alpha))
    logging.info('minimum-distance test error {:.3f} over {} trials, Fano bound {:.3f}'.format(
        result.error_rate, trials, result.bound))
    return result
