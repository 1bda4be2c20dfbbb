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
"""Rate studies and theory checks driven by a validated config."""

import math
import multiprocessing
import os
import time
from typing import Dict, List, Optional, Tuple

import torch
from tqdm import tqdm

from attnkernel.cli.config import ExperimentConfig, TheoryConfig
from attnkernel.datagen.generate import generate_dataset, sample_ground_truth, sample_tokens
from attnkernel.datagen.model import GroundTruth
from attnkernel.estimator.alternating import fit, fit_known_matrix
from attnkernel.evaluation.metrics import ErrorRecord, evaluate
from attnkernel.evaluation.rate import RateStudyReport, RecordWriter
from attnkernel.theory.coercivity import coercivity_check
from attnkernel.theory.density import estimate_pU
from attnkernel.theory.fano import minimum_distance_error
from attnkernel.theory.hypotheses import build_hypotheses, kl_summary, lower_bound_constants, min_separation
from attnkernel.utils.common import (DTYPE, ROLE_HOT_START, ROLE_TEST_TOKENS, ROLE_THEORY, ROLE_TRAIN_NOISE,
                                     ROLE_TRAIN_TOKENS, ROLE_TRUTH, spawn_generator)
from attnkernel.utils.errors import TooManyCellFailures
from attnkernel.utils.file_utils import logging, write_json

Cell = Tuple[int, int, int]

CELL_KEYS = ('d', 'M', 'seed')


def parse_cells(text: Optional[str]) -> Dict[str, int]:
    """``'d=5,M=2000'`` -> ``{'d': 5, 'M': 2000}``."""
    if not text:
        return {}
    out = {}
    for item in text.split(','):
        key, sep, value = item.partition('=')
        key = key.strip()
        if not sep or key not in CELL_KEYS:
            raise ValueError('bad cell filter {!r}, expected comma-separated {}=<int>'.format(item, '|'.join(CELL_KEYS)))
        out[key] = int(value)
    return out


def list_cells(config: ExperimentConfig, cell_filter: Optional[Dict[str, int]] = None) -> List[Cell]:
    cell_filter = cell_filter or {}
    cells = [(d, M, s) for d in config.d_list for M in config.M_grid for s in range(config.seeds_per_cell)]
    return [c for c in cells if all(dict(zip(CELL_KEYS, c))[k] == v for k, v in cell_filter.items())]


def cell_ground_truth(config: ExperimentConfig, d: int, seed_index: int) -> GroundTruth:
    """Truth shared by all M of one (d, beta, seed)."""
    generator = spawn_generator(config.seed, ROLE_TRUTH, d, config.truth_degree, seed_index)
    return sample_ground_truth(generator, d, config.truth_degree, config.truth_basis_size,
                               config.matrix_scheme, config.op_norm_bound, config.matrix_rank)


def run_cell(config: ExperimentConfig, cell: Cell) -> ErrorRecord:
    d, M, s = cell
    start = time.perf_counter()
    key = (d, config.truth_degree, M, s)
    truth = cell_ground_truth(config, d, s)
    dataset = generate_dataset(spawn_generator(config.seed, ROLE_TRAIN_TOKENS, *key), truth, M, config.N, d,
                               config.noise_sd, config.token_sampler, config.noise, seed=config.seed,
                               noise_generator=spawn_generator(config.seed, ROLE_TRAIN_NOISE, *key))
    fit_config = config.fit_config(M)
    if config.estimator == 'known_matrix':
        result = fit_known_matrix(dataset, truth.matrix, fit_config, seed=config.seed)
    else:
        result = fit(dataset, fit_config, truth, spawn_generator(config.seed, ROLE_HOT_START, *key), seed=config.seed)
    test_tokens = sample_tokens(spawn_generator(config.seed, ROLE_TEST_TOKENS, *key), config.test_size, config.N, d,
                                config.token_sampler)
    composed, pairwise = evaluate(result, truth, test_tokens)
    wall = time.perf_counter() - start if config.record_wall_time else 0.0
    return ErrorRecord(d, M, config.N, config.beta, s, composed, pairwise, wall)


def _init_worker():
    # cells are the unit of parallelism
    torch.set_num_threads(1)


def _run_cell_safe(args) -> Tuple[Cell, Optional[ErrorRecord], Optional[str]]:
    config, cell = args
    try:
        return cell, run_cell(config, cell), None
    except Exception as e:  # recorded in the failure ledger
        return cell, None, '{}: {}'.format(type(e).__name__, e)


def run_rate_study(config: ExperimentConfig, cell_filter: Optional[Dict[str, int]] = None) -> RateStudyReport:
    """Generate, fit and evaluate every (d, M, seed) cell; write CSV and JSON reports.

    Records are appended to ``records.csv`` by this process, one flushed line
    per finished cell, in cell order.

    Raises:
        TooManyCellFailures: more than ``max_failure_fraction`` of the cells failed.
    """
    cells = list_cells(config, cell_filter)
    if not cells:
        raise ValueError('cell filter {} selects no cells'.format(cell_filter))
    os.makedirs(config.out_dir, exist_ok=True)
    workers = config.num_workers or os.cpu_count() or 1
    workers = min(workers, len(cells))
    logging.info('rate study: {} cells on {} workers, output {}'.format(len(cells), workers, config.out_dir))

    records, failures = [], []
    jobs = [(config, cell) for cell in cells]
    csv_path = os.path.join(config.out_dir, 'records.csv')
    with RecordWriter(csv_path) as writer:
        if workers > 1:
            pool = multiprocessing.Pool(processes=workers, initializer=_init_worker)
            results = pool.imap(_run_cell_safe, jobs)
        else:
            pool = None
            results = map(_run_cell_safe, jobs)
        try:
            for cell, record, error in tqdm(results, total=len(jobs), desc='cells'):
                if record is not None:
                    writer.write(record)
                    records.append(record)
                else:
                    logging.warning('cell d={} M={} seed={} failed: {}'.format(*cell, error))
                    failures.append({'d': cell[0], 'M': cell[1], 'seed': cell[2], 'error': error})
        finally:
            if pool is not None:
                pool.close()
                pool.join()

    notes = []
    if 1 in {c[0] for c in cells} and config.matrix_scheme == 'diagonal':
        notes.append('d=1 with the diagonal scheme gives a rank-1 A*, outside the rank >= 2 model class')
    report = RateStudyReport(records, failures, config.model_dump(), notes=notes)
    report.write_json(os.path.join(config.out_dir, 'rate_study.json'))
    if len(failures) > config.max_failure_fraction * len(cells):
        raise TooManyCellFailures(len(failures), len(cells))
    return report


def random_spline_model(generator: torch.Generator, config: TheoryConfig):
    truth = sample_ground_truth(generator, config.d, config.coercivity_degree, config.coercivity_basis_size,
                                config.matrix_scheme, config.op_norm_bound, config.matrix_rank)
    return truth.kernel, truth.matrix


def run_theory_check(config: TheoryConfig) -> dict:
    """Density estimate, lower-bound construction checks and coercivity margins on one (d, N, A*) cell.

    Raises:
        ValueError: the interval count K_bar is below 8.
        PackingInfeasibleError: the density super-level set cannot host the intervals.
    """
    os.makedirs(config.out_dir, exist_ok=True)
    truth = sample_ground_truth(spawn_generator(config.seed, ROLE_THEORY, 0), config.d, 3, 16,
                                config.matrix_scheme, config.op_norm_bound, config.matrix_rank)
    matrix = truth.matrix
    tokens = sample_tokens(spawn_generator(config.seed, ROLE_THEORY, 1), config.density_samples, config.N, config.d,
                           config.token_sampler)
    density = estimate_pU(tokens, matrix, config.bins)

    constants = lower_bound_constants(density, config.M, config.N, config.beta, config.L, config.noise_sd, config.floor,
                                config.num_intervals, config.half_width)
    if constants.Kbar < 8:
        raise ValueError('K_bar = {} < 8 (c0N = {:.4g}); increase L, M or N, or set num_intervals'.format(
            constants.Kbar, constants.c0N))
    hset = build_hypotheses(density, config.M, config.N, config.beta, config.L, config.noise_sd, config.floor,
                            config.num_intervals, config.half_width, spawn_generator(config.seed, ROLE_THEORY, 2))

    # sup-norm and support on a grid
    grid = torch.linspace(-config.op_norm_bound, config.op_norm_bound, config.grid_points, dtype=DTYPE)
    lo, hi = hset.intervals()
    outside = ~((grid.unsqueeze(-1) >= lo) & (grid.unsqueeze(-1) <= hi)).any(dim=-1)
    sup, leak = 0.0, 0.0
    for k in range(hset.count):
        values = hset.evaluate(k, grid).abs()
        sup = max(sup, values.max().item())
        leak = max(leak, values[outside].max().item() if outside.any() else 0.0)

    separation = min_separation(hset, density)
    kl_tokens = sample_tokens(spawn_generator(config.seed, ROLE_THEORY, 3), config.M, config.N, config.d,
                              config.token_sampler)
    kl = kl_summary(hset, kl_tokens, config.noise_sd, matrix)

    margins = []
    for p in range(config.coercivity_pairs):
        gen = spawn_generator(config.seed, ROLE_THEORY, 4, p)
        g, g_star = random_spline_model(gen, config), random_spline_model(gen, config)
        mc_tokens = sample_tokens(gen, config.coercivity_samples, config.N, config.d, config.token_sampler)
        margins.append(coercivity_check(g, g_star, mc_tokens).to_dict())
    c = config.constant_shift
    gen = spawn_generator(config.seed, ROLE_THEORY, 5)
    base = random_spline_model(gen, config)
    mc_tokens = sample_tokens(gen, config.coercivity_samples, config.N, config.d, config.token_sampler)
    constant_case = coercivity_check((base[0].shifted(c), base[1]), base, mc_tokens).to_dict()
    constant_case['expected_lhs'] = c * c / (config.N - 1)
    constant_case['expected_rhs'] = c * c

    report = {
        'config': config.model_dump(),
        'matrix': matrix.to_dict(),
        'density': density.to_dict(),
        'constants': constants.to_dict(),
        'packing': hset.to_dict(),
        'sup_norm': {'max': sup, 'bound': hset.amplitude, 'outside_support_max': leak,
                     'holds': sup <= hset.amplitude and leak == 0.0},
        'separation': {'min': separation, 'required': 2.0 * constants.s, 'holds': separation >= 2.0 * constants.s},
        'kl': {**kl, 'holds': bool(kl['alpha'] < 1.0 / 8.0) if not math.isnan(kl['alpha']) else False},
        'coercivity': {'trials': margins, 'all_hold': all(m['holds'] for m in margins),
                       'constant_case': constant_case},
    }
    if config.fano_trials > 0:
        fano = minimum_distance_error(hset, matrix, config.M, config.N, config.d, config.noise_sd, kl['alpha'],
                                      config.fano_trials, spawn_generator(config.seed, ROLE_THEORY, 6),
                                      config.token_sampler)
        report['fano'] = fano.to_dict()
    logging.info('theory check: min separation {:.4e} (need {:.4e}), KL alpha {:.4f}, coercivity {}/{} hold'.format(
        separation, 2.0 * constants.s, kl['alpha'], sum(m['holds'] for m in margins), len(margins)))
    write_json(report, os.path.join(config.out_dir, 'theory_report.json'))
    return report
