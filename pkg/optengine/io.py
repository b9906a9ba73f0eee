# optengine/io.py
"""
Response traces on disk: a ``filter_0,filter_1,...`` header row, then one row
per time bin with one column per filter.
"""

from pathlib import Path

import numpy as np

from spikecore.exceptions import SpikeFormatError

from .convolution import ResponseTrace

COLUMN_PREFIX = 'filter_'


def save_traces(traces, path):
    path = Path(path)
    values = np.vstack([np.asarray(getattr(trace, 'values', trace), dtype=np.float64)
                        for trace in traces])
    header = ','.join(f'{COLUMN_PREFIX}{k}' for k in range(values.shape[0]))
    np.savetxt(path, values.T, delimiter=',', fmt='%.17g', header=header, comments='')
    return path


def load_traces(path):
    path = Path(path)
    with path.open() as handle:
        header = handle.readline().strip()
    columns = header.split(',')
    if not header or any(column != f'{COLUMN_PREFIX}{k}' for k, column in enumerate(columns)):
        raise SpikeFormatError(f'expected a "{COLUMN_PREFIX}0,{COLUMN_PREFIX}1,..." header, '
                               f'got {header!r}', path, 1)
    try:
        values = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise SpikeFormatError(f'malformed trace row: {exc}', path) from None
    if values.shape[1] != len(columns):
        raise SpikeFormatError(f'header names {len(columns)} filters, rows hold {values.shape[1]}',
                               path)
    return [ResponseTrace(np.ascontiguousarray(column), k) for k, column in enumerate(values.T)]
