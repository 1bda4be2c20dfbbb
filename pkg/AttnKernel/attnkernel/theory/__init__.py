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
from attnkernel.theory.density import DensityEstimate, estimate_pU, pair_scores
from attnkernel.theory.hypotheses import (HypothesisSet, LowerBoundConstants, build_hypotheses, bump_psi, kl_budget,
                                          kl_summary, l2_separation, lower_bound_constants, min_separation,
                                          pack_intervals, vg_codebook)
from attnkernel.theory.coercivity import CoercivityResult, coercivity_check
from attnkernel.theory.fano import FanoResult, minimum_distance_error
