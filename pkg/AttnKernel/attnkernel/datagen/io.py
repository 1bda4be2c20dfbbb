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
"""Dataset files.

CSV: one row per (m, i) with columns ``m, i, Y, x0 .. x{d-1}``.
Parquet: same columns plus schema metadata carrying the format version and provenance.
"""

import json
import logging

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq
import torch

from attnkernel.datagen.model import Dataset, TokenBatch
from attnkernel.utils.common import DTYPE

FORMAT_NAME = 'attnkernel-dataset'
FORMAT_VERSION = 1


def dataset_to_frame(dataset: Dataset) -> pd.DataFrame:
    M, N, d = dataset.M, dataset.N, dataset.d
    m_idx, i_idx = np.meshgrid(np.arange(M), np.arange(N), indexing='ij')
    df = pd.DataFrame()
    df['m'] = m_idx.reshape(-1)
    df['i'] = i_idx.reshape(-1)
    df['Y'] = dataset.responses.numpy().reshape(-1)
    coords = dataset.tokens.tokens.numpy().reshape(M * N, d)
    for k in range(d):
        df['x{}'.format(k)] = coords[:, k]
    return df


def frame_to_dataset(df: pd.DataFrame, noise_sd: float = 0.0, seed=None, truth_id=None) -> Dataset:
    for col in ('m', 'i', 'Y'):
        if col not in df.columns:
            raise ValueError('dataset table is missing column {}'.format(col))
    coord_cols = [c for c in df.columns if c.startswith('x')]
    d = len(coord_cols)
    if d == 0:
        raise ValueError('dataset table has no token coordinate columns')
    coord_cols = ['x{}'.format(k) for k in range(d)]
    dup = df.duplicated(['m', 'i'])
    if dup.any():
        first = df.loc[dup, ['m', 'i']].iloc[0]
        raise ValueError('duplicate row for (m, i) = ({}, {})'.format(int(first['m']), int(first['i'])))
    df = df.sort_values(['m', 'i'], kind='stable')
    M, N = int(df['m'].max()) + 1, int(df['i'].max()) + 1
    if len(df) != M * N:
        raise ValueError('expected {} rows for M={} N={}, got {}'.format(M * N, M, N, len(df)))
    expected_m, expected_i = np.meshgrid(np.arange(M), np.arange(N), indexing='ij')
    if not (np.array_equal(df['m'].to_numpy(), expected_m.reshape(-1))
            and np.array_equal(df['i'].to_numpy(), expected_i.reshape(-1))):
        raise ValueError('(m, i) pairs must cover 0..{} x 0..{} exactly once'.format(M - 1, N - 1))
    tokens = torch.from_numpy(df[coord_cols].to_numpy(dtype=np.float64).reshape(M, N, d)).to(DTYPE)
    responses = torch.from_numpy(df['Y'].to_numpy(dtype=np.float64).reshape(M, N)).to(DTYPE)
    return Dataset(TokenBatch(tokens), responses, float(noise_sd), seed, truth_id)


def write_dataset_csv(dataset: Dataset, path: str):
    # %.17g is enough digits to round-trip float64
    dataset_to_frame(dataset).to_csv(path, index=False, float_format='%.17g')
    logging.info('wrote dataset M={} N={} d={} to {}'.format(dataset.M, dataset.N, dataset.d, path))


def read_dataset_csv(path: str, noise_sd: float = 0.0) -> Dataset:
    df = pd.read_csv(path, float_precision='round_trip')
    return frame_to_dataset(df, noise_sd)


def write_dataset_parquet(dataset: Dataset, path: str):
    table = pa.Table.from_pandas(dataset_to_frame(dataset), preserve_index=False)
    provenance = {'noise_sd': dataset.noise_sd, 'seed': dataset.seed, 'truth_id': dataset.truth_id}
    metadata = dict(table.schema.metadata or {})
    metadata.update({
        b'attnkernel.format': FORMAT_NAME.encode(),
        b'attnkernel.version': str(FORMAT_VERSION).encode(),
        b'attnkernel.provenance': json.dumps(provenance, sort_keys=True).encode(),
    })
    pq.write_table(table.replace_schema_metadata(metadata), path)
    logging.info('wrote dataset M={} N={} d={} to {}'.format(dataset.M, dataset.N, dataset.d, path))


def read_dataset_parquet(path: str) -> Dataset:
    table = pq.read_table(path)
    metadata = table.schema.metadata or {}
    if metadata.get(b'attnkernel.format') != FORMAT_NAME.encode():
        raise ValueError('{} is not an attnkernel dataset file'.format(path))
    version = int(metadata[b'attnkernel.version'])
    if version > FORMAT_VERSION:
        raise ValueError('dataset format version {} is newer than supported {}'.format(version, FORMAT_VERSION))
    provenance = json.loads(metadata.get(b'attnkernel.provenance', b'{}'))
    return frame_to_dataset(table.to_pandas(), provenance.get('noise_sd', 0.0),
                            provenance.get('seed'), provenance.get('truth_id'))


def read_dataset(path: str) -> Dataset:
    if path.endswith('.parquet'):
        return read_dataset_parquet(path)
    return read_dataset_csv(path)


def write_dataset(dataset: Dataset, path: str):
    if path.endswith('.parquet'):
        write_dataset_parquet(dataset, path)
    else:
        write_dataset_csv(dataset, path)
