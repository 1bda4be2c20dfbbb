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
"""Log-log rate fitting and the rate-study report."""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from attnkernel.evaluation.metrics import ErrorRecord
from attnkernel.utils.common import median_and_iqr
from attnkernel.utils.file_utils import read_json, write_json

CSV_COLUMNS = ['d', 'M', 'N', 'beta', 'seed', 'composed_mse', 'pairwise_l2', 'wall_s']
MIN_RATE_POINTS = 3


def theoretical_slope(beta: float) -> float:
    """-2 beta / (2 beta + 1)"""
    if not beta > 0:
        raise ValueError('beta must be positive, got {}'.format(beta))
    return -2.0 * beta / (2.0 * beta + 1.0)


def rate_slope(points: Sequence[Tuple[float, float]]) -> Tuple[float, float, float]:
    """Least-squares fit of log(error) = slope log(M) + intercept.

    Returns:
        Tuple[float, float, float]: slope, intercept, R^2.
    """
    distinct = len({M for M, _ in points})
    if distinct < MIN_RATE_POINTS:
        raise ValueError('need at least {} distinct M values, got {}'.format(MIN_RATE_POINTS, distinct))
    arr = np.asarray(points, dtype=np.float64)
    if (arr[:, 0] <= 0).any() or (arr[:, 1] <= 0).any():
        raise ValueError('M and errors must be positive for a log-log fit')
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(((y - (slope * x + intercept)) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class SlopeFit:
    d: int
    beta: float
    slope: float
    intercept: float
    r2: float
    theoretical: float
    points: List[Tuple[int, float]]


def format_row(record: ErrorRecord) -> str:
    # repr gives the shortest string that round-trips a float
    return ','.join(repr(getattr(record, c)) for c in CSV_COLUMNS)


class RecordWriter:
    """Appends one flushed CSV line per completed cell."""

    def __init__(self, path: str):
        self.path = path
        self.fout = open(path, 'w', encoding='utf8')
        self.fout.write(','.join(CSV_COLUMNS) + '\n')
        self.fout.flush()

    def write(self, record: ErrorRecord):
        self.fout.write(format_row(record) + '\n')
        self.fout.flush()

    def close(self):
        self.fout.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records_csv(path: str) -> List[ErrorRecord]:
    df = pd.read_csv(path, float_precision='round_trip')
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError('{} lacks columns {}'.format(path, missing))
    return [ErrorRecord(int(r.d), int(r.M), int(r.N), float(r.beta), int(r.seed),
                        float(r.composed_mse), float(r.pairwise_l2), float(r.wall_s))
            for r in df.itertuples(index=False)]


@dataclass
class RateStudyReport:
    records: List[ErrorRecord]
    failures: List[dict] = field(default_factory=list)
    config: Optional[dict] = None
    metric: str = 'composed_mse'
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.medians = self._medians()
        self.slopes = self._slopes()

    def _medians(self) -> Dict[Tuple[int, float, int], dict]:
        groups = defaultdict(list)
        for r in self.records:
            groups[(r.d, r.beta, r.M)].append(getattr(r, self.metric))
        out = {}
        for key in sorted(groups):
            med, q1, q3 = median_and_iqr(groups[key])
            out[key] = {'median': med, 'q1': q1, 'q3': q3, 'count': len(groups[key])}
        return out

    def _slopes(self) -> List[SlopeFit]:
        series = defaultdict(list)
        for (d, beta, M), stats in self.medians.items():
            series[(d, beta)].append((M, stats['median']))
        fits = []
        for (d, beta), points in sorted(series.items()):
            if len(points) < MIN_RATE_POINTS:
                logging.info('d={} beta={} has {} M values, no slope fitted'.format(d, beta, len(points)))
                continue
            if any(err <= 0 for _, err in points):
                logging.warning('d={} beta={} has a zero median error, no slope fitted'.format(d, beta))
                continue
            slope, intercept, r2 = rate_slope(points)
            fits.append(SlopeFit(d, beta, slope, intercept, r2, theoretical_slope(beta), sorted(points)))
            logging.info('d={} beta={} slope {:.4f} (theory {:.4f}) R2 {:.4f}'.format(
                d, beta, slope, theoretical_slope(beta), r2))
        return fits

    def series(self) -> Dict[Tuple[int, float], List[Tuple[int, dict]]]:
        out = defaultdict(list)
        for (d, beta, M), stats in self.medians.items():
            out[(d, beta)].append((M, stats))
        return dict(out)

    def write_csv(self, path: str):
        with RecordWriter(path) as writer:
            for record in self.records:
                writer.write(record)

    def to_dict(self) -> dict:
        return {
            'metric': self.metric,
            'records': [r.to_dict() for r in self.records],
            'failures': self.failures,
            'medians': [{'d': d, 'beta': beta, 'M': M, **stats}
                        for (d, beta, M), stats in self.medians.items()],
            'slopes': [{'d': s.d, 'beta': s.beta, 'slope': s.slope, 'intercept': s.intercept, 'r2': s.r2,
                        'theoretical': s.theoretical} for s in self.slopes],
            'config': self.config,
            'notes': self.notes,
        }

    def write_json(self, path: str):
        write_json(self.to_dict(), path)

    @classmethod
    def from_dict(cls, d: dict) -> 'RateStudyReport':
        records = [ErrorRecord(**r) for r in d['records']]
        return cls(records, d.get('failures', []), d.get('config'), d.get('metric', 'composed_mse'),
                   d.get('notes', []))

    @classmethod
    def read_json(cls, path: str) -> 'RateStudyReport':
        return cls.from_dict(read_json(path))


def slopes_pairwise_spread(slopes: Iterable[SlopeFit]) -> float:
    values = [s.slope for s in slopes]
    return max(values) - min(values) if values else math.nan
