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
from attnkernel.estimator.config import AStepConfig, FitConfig, HotStartConfig, OptimConf
from attnkernel.estimator.ridge import (design_matrix, ridge_objective, ridge_solve, select_hyperparams,
                                        solve_theta)
from attnkernel.estimator.a_step import a_step, loss_and_grad_A, training_loss
from attnkernel.estimator.alternating import FitResult, fit, fit_known_matrix, initial_matrix
