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
"""Lower-bound hypothesis family: bump perturbations packed into the
super-level set of p_U and indexed by a Varshamov-Gilbert codebook.

phi_k(u) = L h^beta sum_l omega^(k)_l psi((u - r_l) / h),
psi(u) = exp(-1 / (1 - (2u)^2)) on |u| < 1/2.
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import List, Optional, Tuple, Union

import torch

from attnkernel.datagen.model import TokenBatch, matrix_entries
from attnkernel.theory.density import DensityEstimate
from attnkernel.utils.common import DTYPE, bilinear_scores
from attnkernel.utils.errors import CodebookError, PackingInfeasibleError

QUAD_NODES = 64
CODEBOOK_BUDGET = 10000
PSI_SUP = math.exp(-1.0)


def bump_psi(u) -> torch.Tensor:
    """Smooth bump supported on [-1/2, 1/2], psi(0) = e^{-1}."""
    u = torch.as_tensor(u, dtype=DTYPE)
    inside = u.abs() < 0.5
    safe = torch.where(inside, u, torch.zeros_like(u))
    return torch.where(inside, torch.exp(-1.0 / (1.0 - (2.0 * safe) ** 2)), torch.zeros_like(u))


def midpoint_nodes(n: int = QUAD_NODES) -> torch.Tensor:
    """Composite midpoint nodes on (-1/2, 1/2), each with weight 1/n."""
    if n < 1:
        raise ValueError('need at least one quadrature node, got {}'.format(n))
    return -0.5 + (torch.arange(n, dtype=DTYPE) + 0.5) / n


def psi_l2_squared(n: int = QUAD_NODES) -> float:
    return bump_psi(midpoint_nodes(n)).pow(2).mean().item()


@dataclass(frozen=True)
class LowerBoundConstants:
    """Constants of the lower-bound construction computed from a density histogram."""
    a_bar: float
    a0: float
    a0_floor: float
    L0: float
    n0: int
    noise_sd: float
    c_eta: float
    C0: float
    c0N: float
    Kbar: int
    h: float
    C1: float
    s: float
    psi_sup: float
    psi_l2sq: float

    def to_dict(self) -> dict:
        return asdict(self)


def lower_bound_constants(density: DensityEstimate, M: int, N: int, beta: float, L: float, noise_sd: float,
                    floor: Optional[float] = None, num_intervals: Optional[int] = None,
                    half_width: Optional[float] = None, quad_nodes: int = QUAD_NODES) -> LowerBoundConstants:
    """Interval count, half-width and separation level for (M, N, beta, L).

    K_bar = ceil(C0 (M N)^{1/(2 beta + 1)}) makes the KL budget of every
    hypothesis at most (1/16) log 2^{K_bar/8}; s is the radius guaranteed by
    a floor on the density and a Hamming distance of K_bar/8.
    """
    if not beta > 0 or not L > 0:
        raise ValueError('beta and L must be positive, got beta={} L={}'.format(beta, L))
    if not noise_sd > 0:
        raise ValueError('noise_sd must be positive, got {}'.format(noise_sd))
    a_bar = max(abs(density.domain[0]), abs(density.domain[1]))
    dens = density.density
    a0 = dens.max().item()
    if floor is None:
        floor = 0.5 * dens.mean().item()
    if not 0 < floor < a0:
        raise PackingInfeasibleError('density floor {:.4g} must lie in (0, max density {:.4g}); '
                                     'choose a smaller floor'.format(floor, a0))
    runs = density.runs_above(floor)
    if (dens > floor).all():
        n0, L0 = 1, 4.0 * a_bar
    else:
        if not 1.0 - 2.0 * a_bar * floor > 0:
            raise ValueError('floor {:.4g} is too large for domain half-width {}'.format(floor, a_bar))
        L0 = (1.0 - 2.0 * a_bar * floor) / (a0 - floor)
        lengths = sorted((b - a for a, b in runs), reverse=True)
        n0, total = len(lengths), 0.0
        for idx, length in enumerate(lengths):
            total += length
            if total > L0 / 2:
                n0 = idx + 1
                break
    c = L0 / (8.0 * n0)
    c_eta = 1.0 / (2.0 * noise_sd ** 2)
    exponent = 1.0 / (2.0 * beta + 1.0)
    C0 = ((128.0 / math.log(2.0)) * c_eta * L ** 2 * PSI_SUP ** 2 * c ** (2.0 * beta)) ** exponent
    c0N = C0 * N ** exponent
    Kbar = num_intervals if num_intervals is not None else math.ceil(c0N * M ** exponent)
    if Kbar < 1:
        raise ValueError('interval count must be positive, got {}'.format(Kbar))
    h = half_width if half_width is not None else c / Kbar
    psi_l2sq = psi_l2_squared(quad_nodes)
    C1 = math.sqrt(floor) * L * math.sqrt(psi_l2sq) / (4.0 * math.sqrt(2.0)) * c ** (beta + 0.5)
    s = 0.5 * math.sqrt(floor * Kbar / 8.0) * L * h ** (beta + 0.5) * math.sqrt(psi_l2sq)
    return LowerBoundConstants(a_bar, a0, floor, L0, n0, noise_sd, c_eta, C0, c0N, Kbar, h, C1, s, PSI_SUP, psi_l2sq)


def pack_intervals(density: DensityEstimate, floor: float, num_intervals: int, half_width: float) -> torch.Tensor:
    """Centers of ``num_intervals`` disjoint intervals [r - h, r + h] inside {p_U > floor}.

    Runs of qualifying bins are filled longest first; a run (a, b) hosting q
    intervals gets centers a + (b - a)(2l - 1) / (2q), l = 1..q.

    Raises:
        PackingInfeasibleError: the runs cannot host ``num_intervals`` intervals.
    """
    if not half_width > 0:
        raise ValueError('half_width must be positive, got {}'.format(half_width))
    runs = sorted(density.runs_above(floor), key=lambda r: (-(r[1] - r[0]), r[0]))
    centers, remaining, capacity_total = [], num_intervals, 0
    for a, b in runs:
        capacity = math.floor((b - a) / (2.0 * half_width))
        capacity_total += capacity
        q = min(capacity, remaining)
        centers.extend(a + (b - a) * (2 * j - 1) / (2 * q) for j in range(1, q + 1))
        remaining -= q
        if remaining == 0:
            break
    if remaining > 0:
        raise PackingInfeasibleError(
            'super-level set {{p_U > {:.4g}}} hosts only {} intervals of half-width {:.4g}, need {}; '
            'reduce c0 or M, or lower the density floor'.format(floor, capacity_total, half_width, num_intervals))
    return torch.tensor(sorted(centers), dtype=DTYPE)


def hamming_distances(words: torch.Tensor) -> torch.Tensor:
    return (words.unsqueeze(1) != words.unsqueeze(0)).sum(dim=-1)


def _greedy_codebook(length: int, target_count: int, min_distance: int,
                     generator: Optional[torch.Generator], budget: int) -> torch.Tensor:
    words = [torch.zeros(length, dtype=torch.long)]
    tries = 0
    while len(words) < target_count:
        if tries >= budget:
            raise CodebookError('found {} of {} words at distance >= {} after {} candidates; '
                                'lower the target count'.format(len(words), target_count, min_distance, budget))
        tries += 1
        cand = torch.randint(0, 2, (length,), generator=generator)
        if (torch.stack(words) != cand).sum(dim=-1).min().item() >= min_distance:
            words.append(cand)
    book = torch.stack(words)
    dist = hamming_distances(book)
    off = ~torch.eye(len(words), dtype=torch.bool)
    if len(words) > 1 and dist[off].min().item() < min_distance:
        raise CodebookError('codebook verification failed')
    logging.debug('codebook of {} words, length {}, after {} candidates'.format(len(words), length, tries))
    return book


def vg_codebook(length: int, target_count: int, generator: Optional[torch.Generator] = None,
                budget: int = CODEBOOK_BUDGET) -> torch.Tensor:
    """Binary words with pairwise Hamming distance >= ceil(length / 8), first word all zeros.

    Randomized greedy with rejection; every returned pair is checked.
    The count may reach 2^ceil(length / 8) + 1: the Varshamov-Gilbert family has
    at least 2^(length / 8) words besides the all-zero one, which is always counted.

    Returns:
        torch.Tensor: (target_count, length) of 0/1 (long).
    """
    if length < 8:
        raise ValueError('codeword length must be >= 8, got {}'.format(length))
    if target_count < 1 or target_count > 2 ** math.ceil(length / 8) + 1:
        raise ValueError('target count {} is outside [1, {}]'.format(target_count, 2 ** math.ceil(length / 8) + 1))
    return _greedy_codebook(length, target_count, math.ceil(length / 8), generator, budget)


@dataclass(frozen=True)
class HypothesisSet:
    centers: torch.Tensor
    half_width: float
    beta: float
    L: float
    codebook: torch.Tensor
    constants: Optional[LowerBoundConstants] = None

    @property
    def num_intervals(self) -> int:
        return self.centers.numel()

    @property
    def count(self) -> int:
        return self.codebook.shape[0]

    @property
    def amplitude(self) -> float:
        return self.L * self.half_width ** self.beta

    def intervals(self) -> Tuple[torch.Tensor, torch.Tensor]:
        return self.centers - self.half_width, self.centers + self.half_width

    def evaluate(self, k: int, u) -> torch.Tensor:
        """phi_k(u) for any input shape."""
        u = torch.as_tensor(u, dtype=DTYPE)
        bumps = bump_psi((u.unsqueeze(-1) - self.centers) / self.half_width)
        return self.amplitude * (bumps @ self.codebook[k].to(DTYPE))

    def rescaled(self, t: float) -> 'HypothesisSet':
        """Same geometry with Hoelder constant t L."""
        return replace(self, L=self.L * t)

    def to_dict(self) -> dict:
        lo, hi = self.intervals()
        return {'num_intervals': self.num_intervals, 'half_width': self.half_width,
                'centers': self.centers.tolist(), 'amplitude': self.amplitude, 'beta': self.beta, 'L': self.L,
                'count': self.count, 'min_hamming': self.min_hamming(),
                'disjoint': bool((hi[:-1] <= lo[1:] + 1e-12).all()) if self.num_intervals > 1 else True,
                'constants': self.constants.to_dict() if self.constants is not None else None}

    def min_hamming(self) -> int:
        if self.count < 2:
            return self.num_intervals
        dist = hamming_distances(self.codebook)
        return int(dist[~torch.eye(self.count, dtype=torch.bool)].min().item())


def build_hypotheses(density: DensityEstimate, M: int, N: int, beta: float, L: float, noise_sd: float,
                     floor: Optional[float] = None, num_intervals: Optional[int] = None,
                     half_width: Optional[float] = None, generator: Optional[torch.Generator] = None,
                     budget: int = CODEBOOK_BUDGET) -> HypothesisSet:
    """Pack K_bar bumps into {p_U > floor} and attach a codebook of ceil(2^{K_bar/8}) + 1 words.

    Raises:
        PackingInfeasibleError: the super-level set is too small.
        CodebookError: codebook search exhausted ``budget``.
    """
    constants = lower_bound_constants(density, M, N, beta, L, noise_sd, floor, num_intervals, half_width)
    Kbar, h = constants.Kbar, constants.h
    centers = pack_intervals(density, constants.a0_floor, Kbar, h)
    target = math.ceil(2.0 ** (Kbar / 8.0)) + 1
    if Kbar >= 8:
        codebook = vg_codebook(Kbar, target, generator, budget)
    else:
        logging.warning('K_bar = {} < 8, codebook distance floor {} is below the Varshamov-Gilbert regime'.format(
            Kbar, math.ceil(Kbar / 8)))
        codebook = _greedy_codebook(Kbar, target, math.ceil(Kbar / 8), generator, budget)
    logging.info('packed {} intervals of half-width {:.4e}, {} hypotheses'.format(Kbar, h, codebook.shape[0]))
    return HypothesisSet(centers, h, float(beta), float(L), codebook, constants)


def l2_separation(hset: HypothesisSet, k: int, k2: int, density: DensityEstimate,
                  quad_nodes: int = QUAD_NODES) -> float:
    """||phi_k - phi_k2|| in L^2(p_U), midpoint quadrature on each differing bump."""
    if k == k2:
        return 0.0
    differ = hset.codebook[k] != hset.codebook[k2]
    if not differ.any():
        return 0.0
    z = midpoint_nodes(quad_nodes)
    h = hset.half_width
    u = hset.centers[differ].unsqueeze(-1) + h * z
    integrand = bump_psi(z).pow(2) * density(u)
    return math.sqrt(hset.amplitude ** 2 * h * integrand.sum().item() / quad_nodes)


def min_separation(hset: HypothesisSet, density: DensityEstimate) -> float:
    return min(l2_separation(hset, k, k2, density)
               for k in range(hset.count) for k2 in range(k + 1, hset.count))


TokensLike = Union[TokenBatch, torch.Tensor, List[torch.Tensor]]


def _token_tensor(tokens: TokensLike) -> torch.Tensor:
    if isinstance(tokens, TokenBatch):
        return tokens.tokens
    if isinstance(tokens, (list, tuple)):
        return torch.stack([torch.as_tensor(x, dtype=DTYPE) for x in tokens])
    return tokens if tokens.dim() == 3 else tokens.unsqueeze(0)


def hypothesis_operator(hset: HypothesisSet, k: int, tokens: TokensLike, matrix) -> torch.Tensor:
    """R_{phi_k}[X^m]_i with the fixed matrix, shape (M, N)."""
    x = _token_tensor(tokens)
    scores = bilinear_scores(x, matrix_entries(matrix))
    N = scores.shape[-1]
    offdiag = 1.0 - torch.eye(N, dtype=DTYPE)
    return (hset.evaluate(k, scores) * offdiag).sum(dim=-1) / (N - 1)


def kl_budget(hset: HypothesisSet, k: int, tokens: TokensLike, noise_sd: float, matrix) -> float:
    """KL between the Gaussian laws under phi_k and phi_0 = 0: (1 / (2 sigma^2)) sum_m ||R_{phi_k}[X^m]||^2."""
    if not noise_sd > 0:
        raise ValueError('noise_sd must be positive, got {}'.format(noise_sd))
    R = hypothesis_operator(hset, k, tokens, matrix)
    return (R.pow(2).sum() / (2.0 * noise_sd ** 2)).item()


def kl_summary(hset: HypothesisSet, tokens: TokensLike, noise_sd: float, matrix) -> dict:
    """Max and mean KL budget over the nonzero hypotheses, and alpha = mean / log K."""
    kls = [kl_budget(hset, k, tokens, noise_sd, matrix) for k in range(1, hset.count)]
    K = hset.count - 1
    mean = sum(kls) / len(kls) if kls else 0.0
    alpha = mean / math.log(K) if K >= 2 else math.nan
    return {'max': max(kls) if kls else 0.0, 'mean': mean, 'alpha': alpha, 'K': K}
