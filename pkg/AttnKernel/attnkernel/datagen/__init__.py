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
# sampling helpers live in attnkernel.datagen.generate, which depends on the
# registries in attnkernel.utils.class_utils and is not imported here
from attnkernel.datagen.model import (BOUND_TOL, Dataset, GroundTruth, InteractionMatrix, TokenBatch,
                                      forward_operator, matrix_entries, pairwise_interactions)
from attnkernel.datagen.io import read_dataset, write_dataset
