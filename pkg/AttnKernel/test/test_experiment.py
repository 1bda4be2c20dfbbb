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

import pytest

from attnkernel.cli.config import ExperimentConfig, TheoryConfig
from attnkernel.cli.experiment import list_cells, parse_cells, run_cell, run_rate_study, run_theory_check
from attnkernel.evaluation import RateStudyReport
from attnkernel.utils.errors import TooManyCellFailures


def _config(tmp_path, **kw):
    conf = dict(seed=7, M_grid=[100, 200, 400], d_list=[2], seeds_per_cell=2, test_size=50, truth_basis_size=8,
                rounds=1, a_step={'optim': 'adam', 'optim_conf': {'lr': 1e-4}, 'epochs': 2},
                out_dir=str(tmp_path / 'study'), num_workers=1, record_wall_time=False)
    conf.update(kw)
    return ExperimentConfig(**conf)


def _read(path):
    with open(path, 'rb') as f:
        return f.read()


def test_parse_cells():
    assert parse_cells('d=5,M=2000') == {'d': 5, 'M': 2000}
    assert parse_cells(None) == {}
    with pytest.raises(ValueError):
        parse_cells('k=3')
    with pytest.raises(ValueError):
        parse_cells('d5')


def test_list_cells_filters(tmp_path):
    config = _config(tmp_path)
    assert len(list_cells(config)) == 6
    assert list_cells(config, {'M': 200, 'seed': 1}) == [(2, 200, 1)]


def test_fit_config_from_rule(tmp_path):
    config = _config(tmp_path, M_grid=[20000], ridge_overrides={20000: 1e-3})
    fit_config = config.fit_config(20000)
    assert fit_config.basis_size == 73
    assert fit_config.ridge == 1e-3
    assert config.beta == 2.0


def test_config_rejects_bad_values(tmp_path):
    with pytest.raises(ValueError):
        _config(tmp_path, seeds_per_cell=0)
    with pytest.raises(ValueError):
        _config(tmp_path, M_grid=[2])
    with pytest.raises(ValueError):
        _config(tmp_path, unknown_key=1)


def test_single_cell(tmp_path):
    config = _config(tmp_path)
    record = run_cell(config, (2, 100, 0))
    assert record.d == 2 and record.M == 100 and record.N == 3 and record.beta == 2.0
    assert 0 <= record.composed_mse <= record.pairwise_l2 * (1 + 1e-10)
    assert record.wall_s == 0.0

    report = run_rate_study(config, {'M': 100, 'seed': 0})
    assert len(report.records) == 1
    assert report.slopes == []
    assert report.records[0] == record
    assert _read(os.path.join(config.out_dir, 'records.csv')).startswith(
        b'd,M,N,beta,seed,composed_mse,pairwise_l2,wall_s\n')


def test_rate_study_is_reproducible(tmp_path):
    config = _config(tmp_path)
    run_rate_study(config)
    csv_path = os.path.join(config.out_dir, 'records.csv')
    json_path = os.path.join(config.out_dir, 'rate_study.json')
    first_csv, first_json = _read(csv_path), _read(json_path)
    report = run_rate_study(config)
    assert _read(csv_path) == first_csv
    assert _read(json_path) == first_json
    assert len(report.records) == 6
    assert len(report.slopes) == 1
    assert RateStudyReport.read_json(json_path).records == report.records


def test_default_config_is_byte_stable(tmp_path):
    conf = dict(seed=7, M_grid=[100, 200, 400], d_list=[2], seeds_per_cell=1, test_size=50, truth_basis_size=8,
                rounds=1, a_step={'optim': 'adam', 'optim_conf': {'lr': 1e-4}, 'epochs': 2},
                out_dir=str(tmp_path / 'default'), num_workers=1)
    config = ExperimentConfig(**conf)
    assert not config.record_wall_time
    csv_path = os.path.join(config.out_dir, 'records.csv')
    json_path = os.path.join(config.out_dir, 'rate_study.json')
    report = run_rate_study(config)
    first_csv, first_json = _read(csv_path), _read(json_path)
    run_rate_study(ExperimentConfig(**conf))
    assert _read(csv_path) == first_csv
    assert _read(json_path) == first_json
    assert all(r.wall_s == 0.0 for r in report.records)


def test_rate_study_workers_agree(tmp_path):
    serial = run_rate_study(_config(tmp_path, out_dir=str(tmp_path / 'one')))
    parallel = run_rate_study(_config(tmp_path, out_dir=str(tmp_path / 'two'), num_workers=2))
    assert [(r.d, r.M, r.seed) for r in parallel.records] == [(r.d, r.M, r.seed) for r in serial.records]
    for a, b in zip(parallel.records, serial.records):
        assert a.composed_mse == pytest.approx(b.composed_mse, rel=1e-9)


def test_known_matrix_estimator(tmp_path):
    report = run_rate_study(_config(tmp_path, estimator='known_matrix', seeds_per_cell=1))
    assert len(report.records) == 3 and not report.failures


def test_rank_one_truth_is_noted(tmp_path):
    report = run_rate_study(_config(tmp_path, d_list=[1], M_grid=[100], seeds_per_cell=1))
    assert any('d=1' in note for note in report.notes)


def test_cell_failures(tmp_path):
    config = _config(tmp_path, basis_size_overrides={100: 2})
    with pytest.raises(TooManyCellFailures) as info:
        run_rate_study(config)
    assert info.value.failed == 2 and info.value.total == 6
    with open(os.path.join(config.out_dir, 'rate_study.json')) as f:
        saved = json.load(f)
    assert len(saved['failures']) == 2
    assert len(saved['records']) == 4

    tolerant = _config(tmp_path, basis_size_overrides={100: 2}, max_failure_fraction=0.5)
    assert len(run_rate_study(tolerant).failures) == 2


def test_empty_filter_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        run_rate_study(_config(tmp_path), {'d': 9})


def _theory_config(tmp_path, **kw):
    conf = dict(seed=3, d=5, density_samples=5000, M=200, num_intervals=16, grid_points=2001,
                coercivity_pairs=3, fano_trials=2, out_dir=str(tmp_path / 'theory'))
    conf.update(kw)
    return TheoryConfig(**conf)


def test_theory_check_report(tmp_path):
    config = _theory_config(tmp_path)
    report = run_theory_check(config)
    assert set(report) == {'config', 'matrix', 'density', 'constants', 'packing', 'sup_norm', 'separation',
                           'kl', 'coercivity', 'fano'}
    assert report['constants']['Kbar'] == 16
    assert report['packing']['disjoint']
    assert report['sup_norm']['holds']
    assert report['separation']['holds']
    assert len(report['coercivity']['trials']) == 3
    case = report['coercivity']['constant_case']
    assert case['lhs'] == pytest.approx(case['expected_lhs'], abs=1e-10)
    assert case['rhs'] == pytest.approx(case['expected_rhs'], abs=1e-10)
    assert os.path.exists(os.path.join(config.out_dir, 'theory_report.json'))


def test_theory_check_needs_enough_intervals(tmp_path):
    with pytest.raises(ValueError):
        run_theory_check(_theory_config(tmp_path, num_intervals=None, L=1e-3))
