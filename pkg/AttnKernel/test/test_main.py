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
import json
import os

from attnkernel.bin.main import EXIT_CELL_FAILURES, EXIT_INVALID, EXIT_OK, main

STUDY = """
experiment:
  seed: 7
  M_grid: [100, 200, 400]
  d_list: [2]
  seeds_per_cell: 1
  test_size: 50
  truth_basis_size: 8
  rounds: 1
  num_workers: 1
  record_wall_time: False
  a_step:
    optim: adam
    optim_conf:
      lr: 1.0e-4
    epochs: 2
{extra}
fit:
  degree: 3
  basis_size: 8
  ridge: 1.0e-4
  rounds: 1
  a_step:
    optim: sgd
    optim_conf:
      lr: 1.0e-2
    epochs: 1
"""


def _write(tmp_path, extra=''):
    path = tmp_path / 'conf.yaml'
    path.write_text(STUDY.format(extra=extra))
    return str(path)


def test_rate_study_and_plot(tmp_path):
    out = str(tmp_path / 'study')
    assert main(['rate-study', '--config', _write(tmp_path), '--out', out]) == EXIT_OK
    assert os.path.exists(os.path.join(out, 'records.csv'))
    assert os.path.exists(os.path.join(out, 'rate_beta2.svg'))
    plots = str(tmp_path / 'plots')
    assert main(['plot', '--report', os.path.join(out, 'rate_study.json'), '--out', plots]) == EXIT_OK
    assert os.listdir(plots) == ['rate_beta2.svg']


def test_generate_then_fit(tmp_path):
    config = _write(tmp_path)
    out = str(tmp_path / 'data')
    assert main(['generate', '--config', config, '--out', out, '--cells', 'M=100', '--format', 'csv']) == EXIT_OK
    assert main(['fit', '--config', config, '--data', os.path.join(out, 'd2_M100_s0.csv'),
                 '--truth', os.path.join(out, 'd2_M100_s0.truth.json'), '--out', out]) == EXIT_OK
    with open(os.path.join(out, 'fit_result.json')) as f:
        result = json.load(f)
    assert len(result['trajectory']) == 2


def test_invalid_input_exit_code(tmp_path):
    assert main(['rate-study', '--config', _write(tmp_path, '  noise_sd: -1.0'),
                 '--out', str(tmp_path / 'x')]) == EXIT_INVALID
    assert main(['rate-study', '--config', _write(tmp_path), '--cells', 'q=1',
                 '--out', str(tmp_path / 'y')]) == EXIT_INVALID
    theory = tmp_path / 'theory.yaml'
    theory.write_text('theory:\n  L: 1.0e-3\n  density_samples: 5000\n')
    assert main(['theory-check', '--config', str(theory), '--out', str(tmp_path / 'z')]) == EXIT_INVALID


def test_cell_failure_exit_code(tmp_path):
    extra = '  basis_size_overrides:\n    100: 2'
    assert main(['rate-study', '--config', _write(tmp_path, extra), '--out', str(tmp_path / 'f')]) \
        == EXIT_CELL_FAILURES


def test_fit_errors_exit_code(tmp_path):
    config = _write(tmp_path)
    out = str(tmp_path / 'data')
    assert main(['generate', '--config', config, '--out', out, '--cells', 'M=100', '--format', 'csv']) == EXIT_OK
    data = os.path.join(out, 'd2_M100_s0.csv')
    assert main(['fit', '--config', config, '--data', data, '--out', out]) == EXIT_INVALID
    assert main(['fit', '--config', config, '--data', str(tmp_path / 'missing.csv'), '--out', out]) \
        == EXIT_INVALID


def test_fit_creates_out_dir(tmp_path):
    config = _write(tmp_path)
    out = str(tmp_path / 'data')
    assert main(['generate', '--config', config, '--out', out, '--cells', 'M=100', '--format', 'csv']) == EXIT_OK
    fit_out = str(tmp_path / 'fits' / 'd2')
    assert main(['fit', '--config', config, '--data', os.path.join(out, 'd2_M100_s0.csv'),
                 '--truth', os.path.join(out, 'd2_M100_s0.truth.json'), '--out', fit_out]) == EXIT_OK
    assert os.path.exists(os.path.join(fit_out, 'fit_result.json'))
