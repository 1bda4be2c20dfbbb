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
import logging
import os
from typing import Optional

from hyperpyyaml import load_hyperpyyaml

logging.getLogger('matplotlib').setLevel(logging.WARNING)
logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s %(levelname)s %(message)s')


def load_config(path: str, overrides: Optional[dict] = None) -> dict:
    """Read a HyperPyYAML file; ``overrides`` replaces top-level keys before resolution."""
    with open(path, 'r', encoding='utf8') as fin:
        configs = load_hyperpyyaml(fin, overrides=overrides or {})
    return dict(configs)


def read_json(path: str):
    with open(path, 'r', encoding='utf8') as fin:
        return json.load(fin)


def write_json(obj, path: str):
    """Stable JSON: sorted keys, two-space indent, trailing newline."""
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(path, 'w', encoding='utf8') as fout:
        json.dump(obj, fout, ensure_ascii=False, indent=2, sort_keys=True)
        fout.write('\n')
    logging.info('wrote {}'.format(path))
