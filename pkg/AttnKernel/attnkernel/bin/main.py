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
from __future__ import print_function

import argparse
import logging
logging.getLogger('matplotlib').setLevel(logging.WARNING)
import os
import sys

from pydantic import ValidationError

from attnkernel.cli.config import ExperimentConfig, TheoryConfig
from attnkernel.cli.experiment import (cell_ground_truth, list_cells, parse_cells, run_rate_study,
                                       run_theory_check)
from attnkernel.cli.plot import emit_plots
from attnkernel.datagen.generate import generate_dataset
from attnkernel.datagen.io import read_dataset, write_dataset
from attnkernel.datagen.model import GroundTruth
from attnkernel.estimator.alternating import fit
from attnkernel.estimator.config import FitConfig
from attnkernel.evaluation.rate import RateStudyReport
from attnkernel.utils.common import (ROLE_HOT_START, ROLE_TRAIN_NOISE, ROLE_TRAIN_TOKENS, set_all_random_seed,
                                     spawn_generator)
from attnkernel.utils.errors import CodebookError, FitError, TooManyCellFailures
from attnkernel.utils.file_utils import load_config, read_json, write_json
from attnkernel.utils.train_utils import init_summarywriter

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CELL_FAILURES = 2


def add_common_args(parser):
    parser.add_argument('--config', help='HyperPyYAML config file')
    parser.add_argument('--seed', type=int, help='master seed, overrides the config')
    parser.add_argument('--out', help='output directory, overrides the config')
    parser.add_argument('--cells', help='cell filter such as d=5,M=2000')
    parser.add_argument('--log_level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='logging level')


def get_args(argv=None):
    parser = argparse.ArgumentParser(description='attention-kernel estimation experiments')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', help='sample ground truths and datasets for the selected cells')
    add_common_args(p)
    p.add_argument('--format', default='parquet', choices=['parquet', 'csv'], help='dataset file format')

    p = sub.add_parser('fit', help='fit one dataset')
    add_common_args(p)
    p.add_argument('--data', required=True, help='dataset file (.csv or .parquet)')
    p.add_argument('--truth', help='ground-truth JSON, used for hot start')
    p.add_argument('--tensorboard_dir', help='tensorboard log dir')

    p = sub.add_parser('rate-study', help='run the (d, M, seed) grid and fit log-log slopes')
    add_common_args(p)
    p.add_argument('--num_workers', type=int, help='worker processes, defaults to the core count')

    p = sub.add_parser('theory-check', help='density, lower-bound construction and coercivity checks')
    add_common_args(p)

    p = sub.add_parser('plot', help='emit SVG rate plots from rate-study reports')
    add_common_args(p)
    p.add_argument('--report', nargs='+', required=True, help='rate_study.json files')
    return parser.parse_args(argv)


def section(args, name: str) -> dict:
    """The ``name`` block of the config file, or the whole file when it has no such block."""
    if args.config is None:
        return {}
    configs = load_config(args.config)
    return dict(configs.get(name, configs))


def experiment_config(args) -> ExperimentConfig:
    conf = section(args, 'experiment')
    if args.seed is not None:
        conf['seed'] = args.seed
    if args.out is not None:
        conf['out_dir'] = args.out
    if getattr(args, 'num_workers', None) is not None:
        conf['num_workers'] = args.num_workers
    return ExperimentConfig(**conf)


def cmd_generate(args):
    config = experiment_config(args)
    os.makedirs(config.out_dir, exist_ok=True)
    for d, M, s in list_cells(config, parse_cells(args.cells)):
        truth = cell_ground_truth(config, d, s)
        key = (d, config.truth_degree, M, s)
        dataset = generate_dataset(spawn_generator(config.seed, ROLE_TRAIN_TOKENS, *key), truth, M, config.N, d,
                                   config.noise_sd, config.token_sampler, config.noise, seed=config.seed,
                                   noise_generator=spawn_generator(config.seed, ROLE_TRAIN_NOISE, *key))
        stem = os.path.join(config.out_dir, 'd{}_M{}_s{}'.format(d, M, s))
        write_dataset(dataset, '{}.{}'.format(stem, args.format))
        write_json(truth.to_dict(), '{}.truth.json'.format(stem))


def cmd_fit(args):
    conf = section(args, 'fit')
    if args.seed is not None:
        set_all_random_seed(args.seed)
    config = FitConfig(**conf)
    dataset = read_dataset(args.data)
    truth = GroundTruth.from_dict(read_json(args.truth)) if args.truth else None
    seed = args.seed if args.seed is not None else 0
    writer = init_summarywriter(args.tensorboard_dir)
    result = fit(dataset, config, truth, spawn_generator(seed, ROLE_HOT_START), writer, seed)
    if writer is not None:
        writer.close()
    out = args.out or '.'
    os.makedirs(out, exist_ok=True)
    write_json(result.to_dict(), os.path.join(out, 'fit_result.json'))


def cmd_rate_study(args):
    config = experiment_config(args)
    report = run_rate_study(config, parse_cells(args.cells))
    if report.slopes:
        emit_plots(report, config.out_dir)


def cmd_theory_check(args):
    conf = section(args, 'theory')
    if args.seed is not None:
        conf['seed'] = args.seed
    if args.out is not None:
        conf['out_dir'] = args.out
    run_theory_check(TheoryConfig(**conf))


def cmd_plot(args):
    reports = [RateStudyReport.read_json(path) for path in args.report]
    emit_plots(reports, args.out or '.')


COMMANDS = {
    'generate': cmd_generate,
    'fit': cmd_fit,
    'rate-study': cmd_rate_study,
    'theory-check': cmd_theory_check,
    'plot': cmd_plot,
}


def main(argv=None) -> int:
    args = get_args(argv)
    logging.getLogger().setLevel(args.log_level)
    try:
        COMMANDS[args.command](args)
    except TooManyCellFailures as e:
        logging.error(str(e))
        return EXIT_CELL_FAILURES
    except (ValueError, ValidationError, FitError, CodebookError, OSError) as e:
        logging.error('{}: {}'.format(type(e).__name__, e))
        return EXIT_INVALID
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
