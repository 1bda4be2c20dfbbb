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
import torch

from attnkernel.datagen.samplers import (uniform_tokens, shared_latent_tokens,
                                         gaussian_noise, uniform_noise,
                                         diagonal_matrix, low_rank_matrix)


ATTNKERNEL_TOKEN_SAMPLERS = {
    "uniform": uniform_tokens,
    "shared_latent": shared_latent_tokens,
}

ATTNKERNEL_NOISE_SAMPLERS = {
    "gaussian": gaussian_noise,
    "uniform": uniform_noise,
}

ATTNKERNEL_MATRIX_SCHEMES = {
    "diagonal": diagonal_matrix,
    "low_rank": low_rank_matrix,
}

ATTNKERNEL_OPTIMIZERS = {
    "sgd": torch.optim.SGD,
    "adam": torch.optim.Adam,
}


def lookup(registry: dict, name: str, what: str):
    if name not in registry:
        raise ValueError('unknown {}: {} (choose from {})'.format(what, name, sorted(registry)))
    return registry[name]
