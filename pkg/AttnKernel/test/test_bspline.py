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

from attnkernel.bspline import (SplineKernel, build_knots, eval_basis, eval_spline, eval_spline_deriv, greville,
                                interpolate, smoothness_of_degree)
from attnkernel.utils.common import DTYPE


def test_build_knots_degree_zero():
    knots = build_knots(0, 4, (-1.0, 1.0))
    assert knots.knots.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_build_knots_minimal_clamped():
    knots = build_knots(1, 2, (-1.0, 1.0))
    assert knots.knots.tolist() == [-1.0, -1.0, 1.0, 1.0]


def test_build_knots_cubic_layout():
    knots = build_knots(3, 16, (-1.0, 1.0))
    t = knots.knots
    assert t.numel() == 20
    assert knots.num_spans == 13
    assert t[:4].tolist() == [-1.0] * 4 and t[-4:].tolist() == [1.0] * 4
    assert torch.unique(t).numel() == 14
    assert_close(knots.breakpoints[1:] - knots.breakpoints[:-1],
                 torch.full((13,), 2.0 / 13, dtype=DTYPE), rtol=0, atol=1e-15)
    assert bool((t[1:] >= t[:-1]).all())


@pytest.mark.parametrize('degree,basis_size,domain', [
    (3, 3, (-1.0, 1.0)),
    (-1, 4, (-1.0, 1.0)),
    (2, 5, (1.0, 1.0)),
    (2, 5, (1.0, -1.0)),
])
def test_build_knots_rejects(degree, basis_size, domain):
    with pytest.raises(ValueError):
        build_knots(degree, basis_size, domain)


def test_eval_basis_indicator():
    basis = eval_basis(build_knots(0, 4), torch.tensor(-0.7, dtype=DTYPE))
    assert basis.tolist() == [1.0, 0.0, 0.0, 0.0]


def test_eval_basis_linear_hats():
    basis = eval_basis(build_knots(1, 3), torch.tensor(-0.5, dtype=DTYPE))
    assert_close(basis, torch.tensor([0.5, 0.5, 0.0], dtype=DTYPE))


@pytest.mark.parametrize('degree,basis_size', [(0, 5), (1, 4), (2, 7), (3, 16), (5, 9), (8, 30)])
def test_partition_of_unity_and_local_support(degree, basis_size):
    g = torch.Generator().manual_seed(degree * 100 + basis_size)
    a_bar = 0.5 + torch.rand(1, generator=g, dtype=DTYPE).item()
    knots = build_knots(degree, basis_size, (-a_bar, a_bar))
    u = (2.0 * torch.rand(1000, generator=g, dtype=DTYPE) - 1.0) * a_bar
    basis = eval_basis(knots, u)
    assert (basis.sum(dim=-1) - 1.0).abs().max().item() <= 1e-12
    assert bool((basis >= 0).all())
    assert int((basis > 0).sum(dim=-1).max()) <= degree + 1


def test_eval_basis_clamps_outside_domain():
    knots = build_knots(3, 8)
    assert_close(eval_basis(knots, torch.tensor([1.5, -3.0], dtype=DTYPE)),
                 eval_basis(knots, torch.tensor([1.0, -1.0], dtype=DTYPE)))


def test_eval_spline_simple_cases():
    knots = build_knots(3, 10)
    u = torch.linspace(-1, 1, 101, dtype=DTYPE)
    assert_close(eval_spline(SplineKernel(knots, torch.full((10,), 2.5, dtype=DTYPE)), u),
                 torch.full((101,), 2.5, dtype=DTYPE))
    assert eval_spline(SplineKernel(knots, torch.zeros(10, dtype=DTYPE)), u).abs().max().item() == 0.0
    hat = SplineKernel(build_knots(1, 3), torch.tensor([0.0, 1.0, 0.0], dtype=DTYPE))
    assert eval_spline(hat, torch.tensor(-0.5, dtype=DTYPE)).item() == pytest.approx(0.5, abs=1e-15)


def test_eval_spline_deriv_simple_cases():
    knots = build_knots(3, 10)
    u = torch.linspace(-1, 1, 51, dtype=DTYPE)
    const = SplineKernel(knots, torch.full((10,), -1.25, dtype=DTYPE))
    assert eval_spline_deriv(const, u).abs().max().item() <= 1e-12
    hat = SplineKernel(build_knots(1, 3), torch.tensor([0.0, 1.0, 0.0], dtype=DTYPE))
    assert eval_spline_deriv(hat, torch.tensor(-0.5, dtype=DTYPE)).item() == pytest.approx(1.0, abs=1e-14)


def test_eval_spline_deriv_rejects_degree_zero():
    with pytest.raises(ValueError):
        eval_spline_deriv(SplineKernel(build_knots(0, 4), torch.ones(4, dtype=DTYPE)), 0.1)


def test_derivative_matches_central_difference():
    g = torch.Generator().manual_seed(7)
    kernel = SplineKernel(build_knots(3, 6), torch.randn(6, generator=g, dtype=DTYPE))
    h = 1e-5
    u = (2.0 * torch.rand(1000, generator=g, dtype=DTYPE) - 1.0) * (1.0 - 4 * h)
    exact = eval_spline_deriv(kernel, u)
    fd = (eval_spline(kernel, u + h) - eval_spline(kernel, u - h)) / (2 * h)
    err = (exact - fd).abs()
    big = exact.abs() >= 1.0
    assert (err[big] / exact[big].abs()).max().item() <= 1e-6
    assert err[~big].max().item() <= 1e-8


def test_derivative_at_boundary_is_one_sided():
    kernel = SplineKernel(build_knots(2, 5), torch.tensor([0.0, 1.0, 3.0, 2.0, -1.0], dtype=DTYPE))
    h = 1e-6
    right = (eval_spline(kernel, torch.tensor(1.0, dtype=DTYPE))
             - eval_spline(kernel, torch.tensor(1.0 - h, dtype=DTYPE))) / h
    assert eval_spline_deriv(kernel, torch.tensor(1.0, dtype=DTYPE)).item() == pytest.approx(right.item(), rel=1e-4)


@pytest.mark.parametrize('degree', [1, 2, 3, 5])
def test_polynomial_reproduction(degree):
    g = torch.Generator().manual_seed(degree)
    knots = build_knots(degree, degree + 7)
    coeffs = torch.randn(degree + 1, generator=g, dtype=DTYPE)

    def poly(u):
        return sum(c * u ** p for p, c in enumerate(coeffs))

    sites = greville(knots)
    kernel = interpolate(knots, sites, poly(sites))
    u = 2.0 * torch.rand(1000, generator=g, dtype=DTYPE) - 1.0
    assert (kernel(u) - poly(u)).abs().max().item() <= 1e-9


def test_kernel_serialization_and_smoothness():
    kernel = SplineKernel(build_knots(3, 8, (-2.0, 2.0)), torch.arange(8, dtype=DTYPE))
    again = SplineKernel.from_dict(kernel.to_dict())
    assert torch.equal(again.theta, kernel.theta)
    assert torch.equal(again.knots.knots, kernel.knots.knots)
    assert smoothness_of_degree(3) == 2 and smoothness_of_degree(8) == 7


def test_theta_length_must_match_basis():
    with pytest.raises(ValueError):
        SplineKernel(build_knots(3, 8), torch.zeros(7, dtype=DTYPE))


def test_shifted_kernel_adds_constant():
    kernel = SplineKernel(build_knots(3, 8), torch.linspace(-1, 1, 8, dtype=DTYPE))
    u = torch.linspace(-1, 1, 33, dtype=DTYPE)
    assert_close(kernel.shifted(0.3)(u), kernel(u) + 0.3, rtol=0, atol=1e-14)
    assert math.isclose(kernel.shifted(0.0)(u)[0].item(), kernel(u)[0].item())
