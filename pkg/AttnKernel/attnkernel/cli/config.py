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
"""Experiment and theory-check settings."""

import logging
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from attnkernel.estimator.config import AStepConfig, FitConfig, HotStartConfig
from attnkernel.estimator.ridge import select_hyperparams


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    seed: int = Field(1986, ge=0)
    M_grid: List[int] = Field(default_factory=lambda: [2000, 4000, 8000, 16000], min_length=1)
    N: int = Field(3, ge=2)
    d_list: List[int] = Field(default_factory=lambda: [5], min_length=1)
    seeds_per_cell: int = Field(20, ge=1)
    test_size: int = Field(500, ge=1)

    # ground truth
    truth_degree: int = Field(3, ge=2)
    truth_basis_size: int = Field(16, ge=3)
    matrix_scheme: Literal['diagonal', 'low_rank'] = 'diagonal'
    matrix_rank: Optional[int] = Field(None, ge=2)
    op_norm_bound: float = Field(1.0, gt=0)
    token_sampler: Literal['uniform', 'shared_latent'] = 'uniform'
    noise: Literal['gaussian', 'uniform'] = 'gaussian'
    noise_sd: float = Field(0.07, ge=0)

    # estimator
    estimator: Literal['alternating', 'known_matrix'] = 'alternating'
    estimator_degree: Optional[int] = Field(None, ge=1)
    K_scale: float = Field(16.0, gt=0)
    lambda_scale: float = Field(2.0, ge=0)
    basis_size_overrides: Dict[int, int] = Field(default_factory=dict)
    ridge_overrides: Dict[int, float] = Field(default_factory=dict)
    rounds: int = Field(4, ge=1)
    matrix_penalty: float = Field(1e-5, ge=0)
    rank_bound: Optional[int] = Field(None, ge=2)
    a_step: AStepConfig = AStepConfig()
    hot_start: HotStartConfig = HotStartConfig()

    # execution
    out_dir: str = 'exp/rate_study'
    num_workers: Optional[int] = Field(None, ge=1)
    record_wall_time: bool = False
    max_failure_fraction: float = Field(0.2, ge=0, le=1)

    @field_validator('M_grid')
    @classmethod
    def _check_M(cls, v):
        if any(M < 3 for M in v):
            raise ValueError('every M must be >= 3 so that log M > 1, got {}'.format(v))
        return v

    @field_validator('d_list')
    @classmethod
    def _check_d(cls, v):
        if any(d < 1 for d in v):
            raise ValueError('every d must be >= 1, got {}'.format(v))
        return v

    @model_validator(mode='after')
    def _check_truth(self):
        if self.truth_basis_size < self.truth_degree + 1:
            raise ValueError('truth_basis_size {} < truth_degree + 1'.format(self.truth_basis_size))
        if self.hot_start.mode == 'cold':
            logging.warning('cold start is meant for experiments without oracle access, '
                            'not for rate reproduction')
        return self

    @property
    def beta(self) -> float:
        """Smoothness of the ground truth, P* - 1."""
        return float(self.truth_degree - 1)

    @property
    def degree(self) -> int:
        return self.estimator_degree if self.estimator_degree is not None else self.truth_degree

    def fit_config(self, M: int) -> FitConfig:
        """Estimator settings for sample size M, with K_est and lambda_theta from the closed-form rule."""
        # the rule uses the smoothness the estimator can represent, P_est - 1
        beta_est = float(self.degree - 1) if self.degree > 1 else self.beta
        basis_size, ridge = select_hyperparams(M, self.N, beta_est, self.K_scale, self.lambda_scale)
        basis_size = self.basis_size_overrides.get(M, basis_size)
        if M in self.basis_size_overrides and M not in self.ridge_overrides:
            ridge = self.lambda_scale * basis_size / (M * (self.N - 1))
        ridge = self.ridge_overrides.get(M, ridge)
        return FitConfig(degree=self.degree, basis_size=basis_size, ridge=ridge,
                         matrix_penalty=self.matrix_penalty, rounds=self.rounds,
                         op_norm_bound=self.op_norm_bound, rank_bound=self.rank_bound,
                         a_step=self.a_step, hot_start=self.hot_start)


class TheoryConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    seed: int = Field(1986, ge=0)
    d: int = Field(5, ge=1)
    N: int = Field(3, ge=2)
    matrix_scheme: Literal['diagonal', 'low_rank'] = 'diagonal'
    matrix_rank: Optional[int] = Field(None, ge=2)
    op_norm_bound: float = Field(1.0, gt=0)
    token_sampler: Literal['uniform', 'shared_latent'] = 'uniform'

    # density histogram
    density_samples: int = Field(20000, ge=1)
    bins: Optional[int] = Field(None, ge=2)
    floor: Optional[float] = Field(None, gt=0)

    # lower-bound construction
    M: int = Field(1000, ge=1)
    beta: float = Field(2.0, gt=0)
    L: float = Field(1000.0, gt=0)
    noise_sd: float = Field(0.07, gt=0)
    num_intervals: Optional[int] = Field(None, ge=1)
    half_width: Optional[float] = Field(None, gt=0)
    grid_points: int = Field(20001, ge=3)

    # coercivity
    coercivity_pairs: int = Field(50, ge=1)
    coercivity_samples: int = Field(10000, ge=1)
    coercivity_degree: int = Field(3, ge=1)
    coercivity_basis_size: int = Field(16, ge=2)
    constant_shift: float = 0.5

    # minimum-distance test, 0 disables it
    fano_trials: int = Field(0, ge=0)

    out_dir: str = 'exp/theory'
