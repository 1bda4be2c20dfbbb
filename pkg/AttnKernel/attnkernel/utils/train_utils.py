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
import os
from typing import Iterable, List, Optional

import torch
from torch.utils.tensorboard import SummaryWriter

from attnkernel.utils.class_utils import ATTNKERNEL_OPTIMIZERS, lookup


def init_optimizer(a_step_conf, params: Iterable[torch.Tensor]) -> torch.optim.Optimizer:
    optim_cls = lookup(ATTNKERNEL_OPTIMIZERS, a_step_conf.optim, 'optimizer')
    return optim_cls(params, **a_step_conf.optimizer_kwargs())


def init_summarywriter(tensorboard_dir: Optional[str]) -> Optional[SummaryWriter]:
    writer = None
    if tensorboard_dir:
        os.makedirs(tensorboard_dir, exist_ok=True)
        writer = SummaryWriter(tensorboard_dir)
    return writer


def update_parameter(optimizer: torch.optim.Optimizer, params: List[torch.Tensor],
                     grads: List[torch.Tensor], info_dict: dict) -> dict:
    """Write analytic gradients into ``.grad`` and take one optimizer step."""
    for p, g in zip(params, grads):
        p.grad = g.detach().clone()
    grad_norm = torch.sqrt(sum((g * g).sum() for g in grads)).item()
    with torch.no_grad():
        optimizer.step()
    optimizer.zero_grad(set_to_none=True)
    info_dict['lr'] = optimizer.param_groups[0]['lr']
    info_dict['grad_norm'] = grad_norm
    return info_dict


def log_per_step(writer: Optional[SummaryWriter], info_dict: dict):
    tag = info_dict['tag']
    step = info_dict['step']
    loss_dict = info_dict['loss_dict']

    if writer is not None:
        for k in ['lr', 'grad_norm']:
            writer.add_scalar('{}/{}'.format(tag, k), info_dict[k], step + 1)
        for k, v in loss_dict.items():
            writer.add_scalar('{}/{}'.format(tag, k), v, step + 1)

    if (info_dict['epoch'] + 1) % info_dict.get('log_interval', 1) == 0:
        log_str = '{} Round {} Epoch {} '.format(tag, info_dict['round'], info_dict['epoch'] + 1)
        for name, value in loss_dict.items():
            log_str += '{} {:.6e} '.format(name, value)
        log_str += 'lr {:.3e} grad_norm {:.6e}'.format(info_dict['lr'], info_dict['grad_norm'])
        logging.debug(log_str)


def log_per_round(writer: Optional[SummaryWriter], info_dict: dict):
    round_index = info_dict['round']
    logging.info('Round {} THETA ridge objective {:.6e} -> {:.6e} solver {} loss {:.6e}'.format(
        round_index, info_dict['objective_before'], info_dict['objective_after'],
        info_dict['solver'], info_dict['loss']))
    if writer is not None:
        writer.add_scalar('THETA/ridge_objective', info_dict['objective_after'], round_index)
        writer.add_scalar('THETA/loss', info_dict['loss'], round_index)
