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
"""Exceptions raised by the estimator, theory and experiment layers."""


class GramFactorizationError(RuntimeError):
    """Cholesky factorization of the ridge Gram matrix failed."""


class NonFiniteLossError(FloatingPointError):
    """The A-step produced a non-finite loss (step size too large)."""


class FitError(RuntimeError):

    def __init__(self, message: str, round_index: int):
        super().__init__('round {}: {}'.format(round_index, message))
        self.round_index = round_index


class PackingInfeasibleError(ValueError):
    """The density super-level set cannot host the requested intervals."""


class CodebookError(RuntimeError):
    """Randomized Varshamov-Gilbert search ran out of candidates."""


class TooManyCellFailures(RuntimeError):

    def __init__(self, failed: int, total: int):
        super().__init__('{} of {} cells failed, above the allowed failure fraction'.format(failed, total))
        self.failed = failed
        self.total = total
