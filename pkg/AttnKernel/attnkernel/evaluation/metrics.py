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
"""Test-set error metrics of a fitted model against the ground truth."""

import math
from dataclasses import asdict, dataclass
from typing import Tuple, Union

from attnkernel.bspline import SplineKernel
from attnkernel.datagen.model import GroundTruth, MatrixLike, TokenBatch, forward_operator, pairwise_interactions

# relative slack for the composed <= pairwise check under rounding
JENSEN_TOL = 1e-10


@dataclass(frozen=True)
class ErrorRecord:
    d: int
    M: int
    N: int
    beta: float
    seed: int
    composed_mse: float
    pairwise_l2: float
    wall_s: float = 0.0

    def __post_init__(self):
        for name in ('composed_mse', 'pairwise_l2'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError('{} must be finite and >= 0, got {}'.format(name, value))

    def to_dict(self) -> dict:
        return asdict(self)


# a (kernel, matrix) pair or anything with .kernel and .matrix (GroundTruth, FitResult)
Model = Union[Tuple[SplineKernel, MatrixLike], GroundTruth, object]


def _unpack(model) -> Tuple[SplineKernel, MatrixLike]:
    if isinstance(model, tuple):
        return model
    return model.kernel, model.matrix


def composed_mse(fit: Model, truth: Model, test_tokens: TokenBatch) -> float:
    """Mean over (m, i) of |R_ghat[X^m]_i - R_g*[X^m]_i|^2."""
    k_hat, a_hat = _unpack(fit)
    k_star, a_star = _unpack(truth)
    diff = forward_operator(k_hat, a_hat, test_tokens) - forward_operator(k_star, a_star, test_tokens)
    return diff.pow(2).mean().item()


def pairwise_l2(fit: Model, truth: Model, test_tokens: TokenBatch) -> float:
    """Mean of |ghat(X_i, X_j) - g*(X_i, X_j)|^2 over all off-diagonal test pairs."""
    k_hat, a_hat = _unpack(fit)
    k_star, a_star = _unpack(truth)
    diff = pairwise_interactions(k_hat, a_hat, test_tokens) - pairwise_interactions(k_star, a_star, test_tokens)
    M, N = test_tokens.M, test_tokens.N
    return (diff.pow(2).sum() / (M * N * (N - 1))).item()


def evaluate(fit: Model, truth: Model, test_tokens: TokenBatch) -> Tuple[float, float]:
    """Both metrics, checking composed_mse <= pairwise_l2."""
    composed = composed_mse(fit, truth, test_tokens)
    pairwise = pairwise_l2(fit, truth, test_tokens)
    if composed > pairwise * (1.0 + JENSEN_TOL) + 1e-300:
        raise ArithmeticError('composed MSE {:.6e} exceeds pairwise L2 {:.6e}'.format(composed, pairwise))
    return composed, pairwise
