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
"""Open-uniform (clamped) B-spline basis on a symmetric interval.

The basis is evaluated with the local Cox-de Boor recursion: for every input
only the P+1 basis functions that are nonzero on its knot span are computed,
and dense outputs are assembled by scattering that window.
"""

from dataclasses import dataclass
from typing import Tuple

import torch

from attnkernel.utils.common import DTYPE, as_tensor

Interval = Tuple[float, float]


@dataclass(frozen=True)
class KnotVector:
    """Clamped uniform knot vector.

    Args:
        degree (int): polynomial degree P.
        basis_size (int): number of basis functions K.
        domain (Tuple[float, float]): closed interval [lo, hi].
        knots (torch.Tensor): non-decreasing, length K + P + 1.
    """
    degree: int
    basis_size: int
    domain: Interval
    knots: torch.Tensor

    def __post_init__(self):
        if self.knots.numel() != self.basis_size + self.degree + 1:
            raise ValueError('expect {} knots, got {}'.format(self.basis_size + self.degree + 1,
                                                             self.knots.numel()))

    @property
    def num_spans(self) -> int:
        return self.basis_size - self.degree

    @property
    def breakpoints(self) -> torch.Tensor:
        return self.knots[self.degree:self.basis_size + 1]

    def to_dict(self) -> dict:
        return {'degree': self.degree, 'basis_size': self.basis_size, 'domain': list(self.domain)}

    @classmethod
    def from_dict(cls, d: dict) -> 'KnotVector':
        return build_knots(int(d['degree']), int(d['basis_size']), tuple(d['domain']))


@dataclass(frozen=True)
class SplineKernel:
    """phi(u) = sum_k theta_k B_k(u)."""
    knots: KnotVector
    theta: torch.Tensor

    def __post_init__(self):
        if self.theta.shape != (self.knots.basis_size,):
            raise ValueError('theta must have shape ({},), got {}'.format(
                self.knots.basis_size, tuple(self.theta.shape)))

    @property
    def degree(self) -> int:
        return self.knots.degree

    def __call__(self, u) -> torch.Tensor:
        return eval_spline(self, u)

    def derivative(self) -> 'SplineKernel':
        """Exact derivative as a spline of degree P-1 on the same breakpoints.

        Uses B'_k coefficient differences: c_k = P (theta_{k+1} - theta_k) / (t_{k+P+1} - t_{k+1}).
        """
        P = self.knots.degree
        if P == 0:
            raise ValueError('derivative of a degree-0 spline is not supported')
        t = self.knots.knots
        K = self.knots.basis_size
        span = t[P + 1:K + P] - t[1:K]
        coeffs = P * (self.theta[1:] - self.theta[:-1]) / span
        return SplineKernel(build_knots(P - 1, K - 1, self.knots.domain), coeffs)

    def shifted(self, c: float) -> 'SplineKernel':
        """phi + c (partition of unity makes this a coefficient shift)."""
        return SplineKernel(self.knots, self.theta + c)

    def to_dict(self) -> dict:
        return {'knots': self.knots.to_dict(), 'theta': self.theta.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> 'SplineKernel':
        return cls(KnotVector.from_dict(d['knots']), torch.tensor(d['theta'], dtype=DTYPE))


def build_knots(degree: int, basis_size: int, domain: Interval = (-1.0, 1.0)) -> KnotVector:
    """Clamped uniform knots with K basis functions of degree P.

    The first and last knot are repeated P+1 times and the K-P spans in
    between are equally wide.

    Examples:
        >>> build_knots(0, 4, (-1.0, 1.0)).knots
        tensor([-1.0000, -0.5000,  0.0000,  0.5000,  1.0000], dtype=torch.float64)
        >>> build_knots(1, 2, (-1.0, 1.0)).knots
        tensor([-1., -1.,  1.,  1.], dtype=torch.float64)

    """
    if degree < 0:
        raise ValueError('degree must be non-negative, got {}'.format(degree))
    if basis_size < degree + 1:
        raise ValueError('basis size {} < degree + 1 = {}, basis would be rank-deficient'.format(
            basis_size, degree + 1))
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise ValueError('empty domain [{}, {}]'.format(lo, hi))
    n_spans = basis_size - degree
    breaks = torch.linspace(lo, hi, n_spans + 1, dtype=DTYPE)
    # pin the endpoints exactly, linspace may round the last one
    breaks[0], breaks[-1] = lo, hi
    knots = torch.cat([breaks.new_full((degree,), lo), breaks, breaks.new_full((degree,), hi)])
    return KnotVector(degree, basis_size, (lo, hi), knots)


def basis_window(knots: KnotVector, u) -> Tuple[torch.Tensor, torch.Tensor]:
    """Nonzero window of the basis at every input.

    Inputs outside the domain are clamped to the nearest endpoint.

    Args:
        knots (KnotVector): basis definition.
        u: real tensor of any shape.

    Returns:
        torch.Tensor: first nonzero basis index, same shape as u (long).
        torch.Tensor: values of basis functions first..first+P, shape (*u.shape, P+1).
    """
    t = knots.knots
    P, K = knots.degree, knots.basis_size
    u = as_tensor(u).clamp(knots.domain[0], knots.domain[1]).contiguous()
    span = (torch.searchsorted(t, u, right=True) - 1).clamp(P, K - 1)
    values = [torch.ones_like(u)]
    left, right = [None], [None]
    for j in range(1, P + 1):
        left.append(u - t[span + 1 - j])
        right.append(t[span + j] - u)
        saved = torch.zeros_like(u)
        nxt = []
        for r in range(j):
            temp = values[r] / (right[r + 1] + left[j - r])
            nxt.append(saved + right[r + 1] * temp)
            saved = left[j - r] * temp
        nxt.append(saved)
        values = nxt
    return span - P, torch.stack(values, dim=-1)


def eval_basis(knots: KnotVector, u) -> torch.Tensor:
    """Dense basis B_1(u), ..., B_K(u) with shape (*u.shape, K)."""
    first, values = basis_window(knots, u)
    index = first.unsqueeze(-1) + torch.arange(knots.degree + 1)
    out = values.new_zeros(values.shape[:-1] + (knots.basis_size,))
    return out.scatter_(-1, index, values)


def eval_spline(kernel: SplineKernel, u) -> torch.Tensor:
    first, values = basis_window(kernel.knots, u)
    index = first.unsqueeze(-1) + torch.arange(kernel.degree + 1)
    return (values * kernel.theta[index]).sum(dim=-1)


def eval_spline_deriv(kernel: SplineKernel, u) -> torch.Tensor:
    """phi'(u); one-sided from the interior at the clamped ends."""
    if kernel.degree == 0:
        raise ValueError('eval_spline_deriv requires degree >= 1')
    return eval_spline(kernel.derivative(), u)


def smoothness_of_degree(degree: int) -> int:
    # a degree-P spline is C^{P-1}
    return degree - 1


def greville(knots: KnotVector) -> torch.Tensor:
    """Greville abscissae, a unisolvent set of interpolation sites."""
    P, K, t = knots.degree, knots.basis_size, knots.knots
    if P == 0:
        return 0.5 * (t[:-1] + t[1:])
    return torch.stack([t[k + 1:k + P + 1].mean() for k in range(K)])


def interpolate(knots: KnotVector, sites, values) -> SplineKernel:
    """Spline through (sites, values) by solving the K x K collocation system."""
    sites = as_tensor(sites)
    values = as_tensor(values)
    if sites.shape != (knots.basis_size,) or values.shape != sites.shape:
        raise ValueError('need exactly {} sites and values'.format(knots.basis_size))
    collocation = eval_basis(knots, sites)
    return SplineKernel(knots, torch.linalg.solve(collocation, values))
