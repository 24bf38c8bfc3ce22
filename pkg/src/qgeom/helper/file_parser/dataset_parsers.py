"""
Readers for numeric point-cloud files.

Row and column numbers in parse errors are 1-based and count file lines, so a
header line is row 1 when present.
"""

import re

import numpy as np
import pandas as pd

from qgeom.exceptions import DatasetParseError

WBC_MEASUREMENTS = (
    'radius',
    'texture',
    'perimeter',
    'area',
    'smoothness',
    'compactness',
    'concavity',
    'concave_points',
    'symmetry',
    'fractal_dimension',
)
WBC_FEATURES = tuple(
    f'{measurement}_{statistic}'
    for statistic in ('mean', 'se', 'worst')
    for measurement in WBC_MEASUREMENTS
)

_RAGGED = re.compile(r'Expected (\d+) fields in line (\d+), saw (\d+)')


def read_table(path, has_header=False):
    """Reads a rectangular CSV into a frame of strings."""
    try:
        frame = pd.read_csv(
            path,
            header=0 if has_header else None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except FileNotFoundError as e:
        raise DatasetParseError(f'{path} does not exist') from e
    except pd.errors.EmptyDataError as e:
        raise DatasetParseError(f'{path} is empty') from e
    except pd.errors.ParserError as e:
        match = _RAGGED.search(str(e))
        if match is None:
            raise DatasetParseError(f'cannot parse {path}: {e}') from e
        expected, line, _ = (int(g) for g in match.groups())
        raise DatasetParseError('ragged row', row=line, column=expected + 1) from e
    if frame.empty:
        raise DatasetParseError(f'{path} contains no data rows')

    offset = 2 if has_header else 1
    missing = frame.isna().to_numpy()
    if missing.any():
        row, column = np.argwhere(missing)[0]
        raise DatasetParseError('ragged row', row=row + offset, column=column + 1)
    return frame


def to_numeric(frame, has_header=False, first_column=1):
    """
    Float values of a frame of strings. Cells are parsed with correct rounding,
    so floats written by ``repr`` read back bit-exactly.
    """
    coerced = frame.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    bad = ~np.isfinite(coerced)
    if bad.any():
        row, column = np.argwhere(bad)[0]
        offset = 2 if has_header else 1
        raise DatasetParseError(
            f'non-numeric cell {frame.iat[row, column]!r}',
            row=row + offset,
            column=column + first_column,
        )
    return np.vectorize(float, otypes=[np.float64])(frame.to_numpy(dtype=object))


def parse_numeric_csv(path, has_header=False):
    """Returns the rows as a float array and the header names, if any."""
    frame = read_table(path, has_header)
    names = [str(c).strip() for c in frame.columns] if has_header else None
    return to_numeric(frame, has_header), names


def parse_wbc(path, has_header=False):
    """
    Either the 30 feature columns alone or the public 32-column layout of
    id, diagnosis and the 30 features. Returns rows, feature names and the
    diagnosis labels (``None`` for the 30-column layout).
    """
    frame = read_table(path, has_header)
    if frame.shape[1] == 32:
        labels = np.array([s.strip() for s in frame.iloc[:, 1]])
        values = to_numeric(frame.iloc[:, 2:], has_header, first_column=3)
    elif frame.shape[1] == 30:
        labels = None
        values = to_numeric(frame, has_header)
    else:
        raise DatasetParseError(
            f'expected 30 or 32 columns in {path}, found {frame.shape[1]}'
        )
    return values, list(WBC_FEATURES), labels
