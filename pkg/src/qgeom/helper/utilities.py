#
# Copyright The NOMAD Authors.
#
# This file is part of NOMAD. See https://nomad-lab.eu for further info.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

import json
import os
import tempfile
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

DISTRIBUTION = 'nomad-quantum-geometry'


def tool_version():
    try:
        return version(DISTRIBUTION)
    except PackageNotFoundError:
        return 'unknown'


def atomic_write_text(path, text):
    """Writes ``text`` to a temporary file next to ``path`` and renames it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_jsonable(value):
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path, data):
    atomic_write_text(path, json.dumps(to_jsonable(data), indent=2))


def write_frame(path, frame, header=True):
    """CSV with ``repr`` floats, which read back bit-exactly."""
    atomic_write_text(path, frame.to_csv(index=False, header=header))


class RunManifest(BaseModel):
    command: str
    parameters: dict = Field(default_factory=dict)
    seeds: dict = Field(default_factory=dict)
    inputs: list[str] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    tool_version: str = Field(default_factory=tool_version)
    started: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    wall_time: float = 0.0

    def write(self, output):
        """Writes the manifest next to ``output`` as ``<output>.manifest.json``."""
        path = Path(f'{output}.manifest.json')
        atomic_write_text(path, self.model_dump_json(indent=2))
        return path


def spectrum_frame(eigenvalues):
    return pd.DataFrame(
        {'index': np.arange(len(eigenvalues)), 'eigenvalue': np.asarray(eigenvalues)}
    )
