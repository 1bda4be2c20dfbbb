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
"""Validated estimator settings.

Key names of the A-step block follow the ``train_conf`` layout used in the
recipes (``optim``, ``optim_conf``), so a YAML block can be passed through as is.
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class OptimConf(BaseModel):
    model_config = ConfigDict(extra='forbid')

    lr: float = Field(1e-8, gt=0)
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = Field(1e-8, gt=0)

    @model_validator(mode='after')
    def _check_betas(self):
        for b in self.betas:
            if not 0.0 <= b < 1.0:
                raise ValueError('betas must lie in [0, 1), got {}'.format(self.betas))
        return self


class AStepConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    optim: Literal['sgd', 'adam'] = 'adam'
    optim_conf: OptimConf = OptimConf()
    epochs: int = Field(20, ge=1)
    project: bool = False
    log_interval: int = Field(5, ge=1)

    def optimizer_kwargs(self) -> dict:
        if self.optim == 'sgd':
            return {'lr': self.optim_conf.lr}
        return self.optim_conf.model_dump()


class HotStartConfig(BaseModel):
    """Initial matrix.

    ``hot``: A0 = A* + Delta_A with Delta_A entrywise N(0, sd^2); sd defaults to 5/d * 1e-7.
    ``cold``: A0 entrywise Gaussian, rescaled to ||A0||_op = a_bar / 2.
    An explicit ``initial_matrix`` (row-major) overrides both.
    """
    model_config = ConfigDict(extra='forbid')

    mode: Literal['hot', 'cold'] = 'hot'
    perturbation_sd: Optional[float] = Field(None, ge=0)
    initial_matrix: Optional[List[List[float]]] = None

    def sd_for(self, d: int) -> float:
        if self.perturbation_sd is not None:
            return self.perturbation_sd
        return 5.0 / d * 1e-7


class FitConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    degree: int = Field(3, ge=1)
    basis_size: int = Field(16, ge=2)
    ridge: float = Field(0.0, ge=0)
    matrix_penalty: float = Field(0.0, ge=0)
    rounds: int = Field(1, ge=1)
    op_norm_bound: float = Field(1.0, gt=0)
    rank_bound: Optional[int] = Field(None, ge=2)
    a_step: AStepConfig = AStepConfig()
    hot_start: HotStartConfig = HotStartConfig()

    @model_validator(mode='after')
    def _check_basis(self):
        if self.basis_size < self.degree + 1:
            raise ValueError('basis_size {} < degree + 1 = {}'.format(self.basis_size, self.degree + 1))
        return self

    @property
    def domain(self) -> Tuple[float, float]:
        return (-self.op_norm_bound, self.op_norm_bound)
