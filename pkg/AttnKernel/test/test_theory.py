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
import math

import pytest
import torch
from torch.testing import assert_close

import attnkernel.theory.hypotheses as hypotheses
from attnkernel.datagen import InteractionMatrix
from attnkernel.datagen.generate import sample_ground_truth, sample_tokens
from attnkernel.theory import (DensityEstimate, HypothesisSet, build_hypotheses, bump_psi, coercivity_check,
                               estimate_pU, kl_budget, kl_summary, l2_separation, lower_bound_constants,
                               min_separation, minimum_distance_error, pack_intervals, vg_codebook)
from attnkernel.theory.fano import fano_bound
from attnkernel.utils.common import DTYPE
from attnkernel.utils.errors import CodebookError, PackingInfeasibleError

UNIT = InteractionMatrix(torch.ones(1, 1, dtype=DTYPE))


def test_density_of_product_of_uniforms():
    tokens = sample_tokens(torch.Generator().manual_seed(0), 200000, 2, 1)
    density = estimate_pU(tokens, UNIT, bins=10)
    assert density.count == 400000
    assert density.masses.sum().item() == pytest.approx(1.0, abs=1e-12)
    assert density.domain == (-1.0, 1.0)
    assert density.masses[:5].sum().item() == 0.0
    # U = X1 X2 has CDF u - u log u on (0, 1]
    cdf = [0.0] + [u - u * math.log(u) for u in (0.2, 0.4, 0.6, 0.8)] + [1.0]
    for b in range(5):
        p = cdf[b + 1] - cdf[b]
        se = math.sqrt(p * (1 - p) / 200000)
        assert abs(density.masses[5 + b].item() - p) <= 3 * se


def test_density_sample_checks():
    tokens = sample_tokens(torch.Generator().manual_seed(0), 10, 2, 1)
    with pytest.raises(ValueError):
        estimate_pU(tokens, UNIT, bins=5)
    with pytest.raises(ValueError):
        estimate_pU(tokens, UNIT, bins=1)


def test_density_lookup_and_runs():
    density = DensityEstimate(torch.linspace(-1, 1, 5, dtype=DTYPE),
                              torch.tensor([0.0, 0.5, 0.25, 0.25], dtype=DTYPE), 100)
    assert density.density.tolist() == [0.0, 1.0, 0.5, 0.5]
    assert density(torch.tensor([-0.75, -0.25, 0.9, 1.5], dtype=DTYPE)).tolist() == [0.0, 1.0, 0.5, 0.0]
    assert density.runs_above(0.25) == [(-0.5, 1.0)]
    assert density.runs_above(0.75) == [(-0.5, 0.0)]


def test_bump_values():
    assert bump_psi(0.0).item() == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert bump_psi(0.25).item() == pytest.approx(math.exp(-4.0 / 3.0), abs=1e-15)
    assert bump_psi(torch.tensor([-0.6, -0.5, 0.5, 0.6])).tolist() == [0.0, 0.0, 0.0, 0.0]


def test_lower_bound_constants_uniform_density():
    density = DensityEstimate.uniform(20)
    const = lower_bound_constants(density, M=1000, N=3, beta=2.0, L=5.0, noise_sd=0.1)
    assert const.n0 == 1 and const.L0 == 4.0
    assert const.a0_floor == pytest.approx(0.25)
    c = 0.5
    expected_C0 = ((128 / math.log(2)) * 50.0 * 25.0 * math.exp(-2.0) * c ** 4) ** 0.2
    assert const.C0 == pytest.approx(expected_C0, rel=1e-12)
    assert const.Kbar == math.ceil(expected_C0 * 3000 ** 0.2)
    assert const.h == pytest.approx(c / const.Kbar, rel=1e-12)
    assert const.s == pytest.approx(const.C1 * const.Kbar ** -2.0, rel=1e-12)


def test_lower_bound_constants_with_empty_bins():
    density = DensityEstimate(torch.linspace(-1, 1, 5, dtype=DTYPE),
                              torch.tensor([0.0, 0.5, 0.25, 0.25], dtype=DTYPE), 100)
    const = lower_bound_constants(density, M=100, N=3, beta=1.0, L=1.0, noise_sd=1.0)
    assert const.a0 == 1.0
    assert const.L0 == pytest.approx(2.0 / 3.0)
    assert const.n0 == 1
    with pytest.raises(PackingInfeasibleError):
        lower_bound_constants(density, M=100, N=3, beta=1.0, L=1.0, noise_sd=1.0, floor=2.0)


def test_pack_intervals_on_uniform_density():
    density = DensityEstimate.uniform(20)
    const = lower_bound_constants(density, M=1000, N=3, beta=2.0, L=5.0, noise_sd=0.1, num_intervals=4)
    assert const.h == pytest.approx(0.125)
    centers = pack_intervals(density, const.a0_floor, 4, const.h)
    assert_close(centers, torch.tensor([-0.75, -0.25, 0.25, 0.75], dtype=DTYPE))


def test_pack_intervals_infeasible():
    masses = torch.zeros(10, dtype=DTYPE)
    masses[5] = 1.0
    density = DensityEstimate(torch.linspace(-1, 1, 11, dtype=DTYPE), masses, 100)
    with pytest.raises(PackingInfeasibleError):
        pack_intervals(density, 0.1, 5, 0.05)


def test_codebook_small_cases():
    book = vg_codebook(8, 2, torch.Generator().manual_seed(0))
    assert book.shape == (2, 8)
    assert book[0].sum().item() == 0 and book[1].sum().item() >= 1
    book = vg_codebook(16, 4, torch.Generator().manual_seed(0))
    for a in range(4):
        for b in range(a + 1, 4):
            assert (book[a] != book[b]).sum().item() >= 2


def test_codebook_counts_zero_word_on_top():
    book = vg_codebook(16, 5, torch.Generator().manual_seed(1))
    assert book.shape == (5, 16)
    assert book[0].sum().item() == 0
    for a in range(5):
        for b in range(a + 1, 5):
            assert (book[a] != book[b]).sum().item() >= 2


def test_codebook_rejects():
    with pytest.raises(ValueError):
        vg_codebook(7, 2)
    with pytest.raises(ValueError):
        vg_codebook(16, 6)
    with pytest.raises(CodebookError):
        vg_codebook(8, 2, torch.Generator().manual_seed(0), budget=0)


def test_hypotheses_on_grid():
    density = DensityEstimate.uniform(20)
    hset = build_hypotheses(density, 1000, 3, 2.0, 5.0, 0.1, num_intervals=16,
                            generator=torch.Generator().manual_seed(0))
    u = torch.linspace(-1, 1, 20001, dtype=DTYPE)
    for k in range(hset.count):
        values = hset.evaluate(k, u)
        assert values.abs().max().item() <= hset.amplitude * math.exp(-1.0) + 1e-15
    assert hset.evaluate(0, u).abs().max().item() == 0.0
    lo, hi = hset.intervals()
    assert bool((hi[:-1] <= lo[1:] + 1e-12).all())
    assert lo[0].item() >= -1.0 and hi[-1].item() <= 1.0
    assert hset.count == 5
    assert hset.min_hamming() >= 2


@pytest.mark.parametrize('Kbar', [16, 32])
def test_separation_meets_radius(Kbar):
    density = DensityEstimate.uniform(20)
    hset = build_hypotheses(density, 1000, 3, 2.0, 5.0, 0.1, num_intervals=Kbar,
                            generator=torch.Generator().manual_seed(Kbar))
    assert min_separation(hset, density) >= 2 * hset.constants.s


def test_single_bump_separation():
    density = DensityEstimate.uniform(20)
    h, L, beta = 0.1, 3.0, 2.0
    hset = HypothesisSet(torch.tensor([0.0, 0.5], dtype=DTYPE), h, beta, L,
                         torch.tensor([[0, 0], [1, 0]]))
    expected = L ** 2 * h ** (2 * beta + 1) * hypotheses.psi_l2_squared() * 0.5
    assert l2_separation(hset, 0, 1, density) ** 2 == pytest.approx(expected, rel=1e-12)
    assert l2_separation(hset, 1, 1, density) == 0.0


def test_kl_budget_basics(monkeypatch):
    density = DensityEstimate.uniform(20)
    hset = build_hypotheses(density, 1000, 3, 2.0, 5.0, 0.1, num_intervals=16,
                            generator=torch.Generator().manual_seed(0))
    tokens = sample_tokens(torch.Generator().manual_seed(1), 50, 3, 1)
    assert kl_budget(hset, 0, tokens, 0.1, UNIT) == 0.0
    base = kl_budget(hset, 1, tokens, 0.1, UNIT)
    assert kl_budget(hset.rescaled(3.0), 1, tokens, 0.1, UNIT) / base == pytest.approx(9.0, rel=1e-10)

    monkeypatch.setattr(hypotheses, 'hypothesis_operator',
                        lambda *args: torch.tensor([[1.0, 0.0, 0.0]], dtype=DTYPE))
    assert kl_budget(hset, 1, tokens, 1.0, UNIT) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        kl_budget(hset, 1, tokens, 0.0, UNIT)


def test_kl_budget_stays_below_one_eighth():
    density_tokens = sample_tokens(torch.Generator().manual_seed(2), 20000, 3, 1)
    density = estimate_pU(density_tokens, UNIT)
    hset = build_hypotheses(density, 1000, 3, 2.0, 1000.0, 0.07, generator=torch.Generator().manual_seed(3))
    tokens = sample_tokens(torch.Generator().manual_seed(4), 1000, 3, 1)
    summary = kl_summary(hset, tokens, 0.07, UNIT)
    assert summary['K'] == hset.count - 1
    assert summary['max'] <= hset.constants.Kbar * math.log(2) / 128 * (1 + 1e-9)
    assert summary['alpha'] < 1 / 8


def test_coercivity_constant_shift():
    truth = sample_ground_truth(torch.Generator().manual_seed(0), 5, 3, 16)
    tokens = sample_tokens(torch.Generator().manual_seed(1), 10000, 3, 5)
    c = 0.5
    result = coercivity_check((truth.kernel.shifted(c), truth.matrix), (truth.kernel, truth.matrix), tokens)
    assert result.lhs == pytest.approx(c * c / 2, abs=1e-10)
    assert result.rhs == pytest.approx(c * c, abs=1e-10)
    assert result.holds

    same = coercivity_check((truth.kernel, truth.matrix), (truth.kernel, truth.matrix), tokens)
    assert same.lhs == 0.0 and same.rhs == 0.0


def test_coercivity_random_pairs():
    g = torch.Generator().manual_seed(11)
    tokens = sample_tokens(g, 10000, 3, 5)
    for _ in range(50):
        a = sample_ground_truth(g, 5, 3, 12, 'low_rank')
        b = sample_ground_truth(g, 5, 3, 12)
        result = coercivity_check((a.kernel, a.matrix), (b.kernel, b.matrix), tokens)
        assert result.holds


def test_coercivity_needs_samples():
    truth = sample_ground_truth(torch.Generator().manual_seed(0), 2, 3, 8)
    tokens = sample_tokens(torch.Generator().manual_seed(1), 100, 3, 2)
    with pytest.raises(ValueError):
        coercivity_check((truth.kernel, truth.matrix), (truth.kernel, truth.matrix), tokens)


def test_fano_bound_and_test():
    assert fano_bound(3, 0.0) == pytest.approx((math.log(3) - math.log(2)) / math.log(2))
    assert math.isnan(fano_bound(2, 0.0))
    density = DensityEstimate.uniform(20)
    hset = build_hypotheses(density, 1000, 3, 2.0, 5.0, 0.1, num_intervals=16,
                            generator=torch.Generator().manual_seed(0))
    result = minimum_distance_error(hset, UNIT, 20, 3, 1, 0.1, alpha=0.05, trials=5,
                                    generator=torch.Generator().manual_seed(1))
    assert result.trials == 5
    assert 0.0 <= result.error_rate <= 1.0
    assert result.bound == pytest.approx(fano_bound(hset.count, 0.05))
