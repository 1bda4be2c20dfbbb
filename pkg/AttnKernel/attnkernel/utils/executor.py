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

import logging
import math
from typing import Callable, List, Optional, Tuple

import torch

from attnkernel.utils.errors import NonFiniteLossError
from attnkernel.utils.train_utils import log_per_step, update_parameter


class Executor:
    """Runs the A-step epochs of successive outer rounds.

    ``step`` counts epochs across rounds so tensorboard curves stay continuous.
    """

    def __init__(self):
        self.step = 0
        self.round = 0

    def train_one_round(self, params: List[torch.Tensor],
                        loss_and_grad: Callable[[], Tuple[float, List[torch.Tensor]]],
                        optimizer: torch.optim.Optimizer, writer, info_dict: dict,
                        project: Optional[Callable[[], None]] = None) -> dict:
        ''' Run the configured number of A-step epochs
        '''
        lr = optimizer.param_groups[0]['lr']
        logging.debug('Round {} A-step info lr {} epochs {}'.format(self.round, lr, info_dict['epochs']))
        for epoch in range(info_dict['epochs']):
            info_dict['tag'] = 'TRAIN'
            info_dict['step'] = self.step
            info_dict['round'] = self.round
            info_dict['epoch'] = epoch

            loss, grads = loss_and_grad()
            if not math.isfinite(loss) or not all(torch.isfinite(g).all() for g in grads):
                raise NonFiniteLossError('non-finite A-step loss {} at epoch {}, lower the learning rate'.format(
                    loss, epoch + 1))
            info_dict['loss_dict'] = {'loss': loss}
            info_dict = update_parameter(optimizer, params, grads, info_dict)
            if project is not None:
                project()
            log_per_step(writer, info_dict)
            self.step += 1
        return info_dict
