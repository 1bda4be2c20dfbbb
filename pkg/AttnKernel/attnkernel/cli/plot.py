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
"""Log-log rate figures: median markers, interquartile whiskers and a
dashed M^{-2 beta/(2 beta + 1)} guide anchored at the first median."""

import os
from collections import defaultdict
from typing import Dict, Iterable, List, Tuple, Union

import matplotlib
matplotlib.use('svg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from attnkernel.evaluation.rate import MIN_RATE_POINTS, RateStudyReport, rate_slope, theoretical_slope  # noqa: E402
from attnkernel.utils.file_utils import logging  # noqa: E402

# fixed ids and no timestamp so files are reproducible
matplotlib.rcParams['svg.hashsalt'] = 'attnkernel'
matplotlib.rcParams['svg.fonttype'] = 'none'

MARKERS = ['o', 's', '^', 'D', 'v', 'P']

# (label, [(M, median, q1, q3), ...])
Series = Tuple[str, List[Tuple[int, float, float, float]]]


def _collect(reports: Iterable[RateStudyReport]) -> Dict[float, Dict[int, List[Tuple[int, dict]]]]:
    by_beta = defaultdict(dict)
    for report in reports:
        for (d, beta), points in report.series().items():
            by_beta[beta][d] = sorted(points)
    return by_beta


def build_rate_figure(series: List[Series], beta: float, title: str = ''):
    """Figure with one marker series per entry and the theoretical guide.

    Returns:
        fig, ax, the guide Line2D and the list of marker containers.
    """
    if not series or any(len(points) == 0 for _, points in series):
        raise ValueError('cannot plot an empty series')
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    containers = []
    for idx, (label, points) in enumerate(series):
        M = np.array([p[0] for p in points], dtype=np.float64)
        med = np.array([p[1] for p in points])
        lower = med - np.array([p[2] for p in points])
        upper = np.array([p[3] for p in points]) - med
        if len(points) >= MIN_RATE_POINTS and (med > 0).all():
            slope = rate_slope(list(zip(M, med)))[0]
            label = '{} (slope {:.3f})'.format(label, slope)
        containers.append(ax.errorbar(M, med, yerr=[lower, upper], fmt=MARKERS[idx % len(MARKERS)],
                                      capsize=3, label=label))
    first_M = np.array([p[0] for p in series[0][1]], dtype=np.float64)
    anchor = series[0][1][0][1]
    expected = theoretical_slope(beta)
    guide, = ax.plot(first_M, anchor * (first_M / first_M[0]) ** expected, 'k--',
                     label='theory {:.3f}'.format(expected))
    ax.set_xscale('log')
    ax.set_yscale('log')
    ax.set_xlabel('sample size M')
    ax.set_ylabel('composed test MSE')
    if title:
        ax.set_title(title)
    ax.legend(fontsize='small')
    fig.tight_layout()
    return fig, ax, guide, containers


def save_svg(fig, path: str):
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logging.info('wrote {}'.format(path))


def emit_plots(reports: Union[RateStudyReport, List[RateStudyReport]], out_dir: str) -> List[str]:
    """One SVG per beta with a series per d; a smoothness comparison when several beta share a d.

    Raises:
        ValueError: no series has enough points.
    """
    if isinstance(reports, RateStudyReport):
        reports = [reports]
    by_beta = _collect(reports)
    if not by_beta:
        raise ValueError('reports contain no records to plot')
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for beta in sorted(by_beta):
        series = [('d={}'.format(d), [(M, s['median'], s['q1'], s['q3']) for M, s in points])
                  for d, points in sorted(by_beta[beta].items()) if len(points) >= MIN_RATE_POINTS]
        if not series:
            logging.warning('beta={} has no series with {} M values, skipped'.format(beta, MIN_RATE_POINTS))
            continue
        fig, _, _, _ = build_rate_figure(series, beta, 'beta = {:g}'.format(beta))
        path = os.path.join(out_dir, 'rate_beta{:g}.svg'.format(beta))
        save_svg(fig, path)
        paths.append(path)

    shared = set.intersection(*[set(v) for v in by_beta.values()]) if len(by_beta) > 1 else set()
    for d in sorted(shared):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        for idx, beta in enumerate(sorted(by_beta)):
            points = by_beta[beta][d]
            if len(points) < MIN_RATE_POINTS:
                continue
            M = np.array([p[0] for p in points], dtype=np.float64)
            med = np.array([p[1]['median'] for p in points])
            yerr = [med - np.array([p[1]['q1'] for p in points]), np.array([p[1]['q3'] for p in points]) - med]
            slope = rate_slope(list(zip(M, med)))[0]
            line = ax.errorbar(M, med, yerr=yerr, fmt=MARKERS[idx % len(MARKERS)], capsize=3,
                               label='beta={:g} (slope {:.3f})'.format(beta, slope))
            expected = theoretical_slope(beta)
            ax.plot(M, med[0] * (M / M[0]) ** expected, '--', color=line[0].get_color(),
                    label='theory {:.3f}'.format(expected))
        ax.set_xscale('log')
        ax.set_yscale('log')
        ax.set_xlabel('sample size M')
        ax.set_ylabel('composed test MSE')
        ax.set_title('d = {}'.format(d))
        ax.legend(fontsize='small')
        fig.tight_layout()
        path = os.path.join(out_dir, 'rate_smoothness_d{}.svg'.format(d))
        save_svg(fig, path)
        paths.append(path)
    if not paths:
        raise ValueError('no series has at least {} M values'.format(MIN_RATE_POINTS))
    return paths
