# spikecore/io.py
"""
Spike file formats.

coo-text::

    N=2 T=3
    0 0
    1 2

dense-csv: an optional ``# N=<int> T=<int>`` header, then one row of 0/1
cells per neuron, one column per time bin.
"""

import logging
import re
from pathlib import Path

import numpy as np

from .exceptions import SpikeFormatError
from .matrix import SpikeMatrix

logger = logging.getLogger(__name__)

COO_TEXT = 'coo-text'
DENSE_CSV = 'dense-csv'
FORMATS = (COO_TEXT, DENSE_CSV)

HEADER_RE = re.compile(r'^\s*N\s*=\s*(\d+)\s+T\s*=\s*(\d+)\s*$')


def infer_format(path):
    """dense-csv for ``.csv`` files, coo-text for anything else."""
    return DENSE_CSV if Path(path).suffix.lower() == '.csv' else COO_TEXT


def _parse_header(text, path, line_no):
    match = HEADER_RE.match(text)
    if not match:
        raise SpikeFormatError(f'malformed header {text.strip()!r}, expected "N=<int> T=<int>"',
                               path, line_no)
    return int(match.group(1)), int(match.group(2))


def _load_coo(path, lines):
    if not lines:
        raise SpikeFormatError('empty file, expected "N=<int> T=<int>" header', path, 1)
    n_neurons, n_bins = _parse_header(lines[0], path, 1)
    neurons, bins = [], []
    seen = set()
    for line_no, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        fields = text.split()
        if len(fields) != 2:
            raise SpikeFormatError(f'expected "neuron bin", got {text!r}', path, line_no)
        try:
            n, t = int(fields[0]), int(fields[1])
        except ValueError:
            raise SpikeFormatError(f'non-integer index in {text!r}', path, line_no) from None
        if not (0 <= n < n_neurons and 0 <= t < n_bins):
            raise SpikeFormatError(
                f'index ({n}, {t}) out of range for N={n_neurons} T={n_bins}', path, line_no)
        if (n, t) in seen:
            raise SpikeFormatError(f'duplicate spike ({n}, {t})', path, line_no)
        seen.add((n, t))
        neurons.append(n)
        bins.append(t)
    return SpikeMatrix(n_neurons, n_bins, neurons, bins)


def _load_dense(path, lines):
    header = None
    first = 0
    if lines and lines[0].lstrip().startswith('#'):
        header = _parse_header(lines[0].lstrip()[1:], path, 1)
        first = 1
    rows = []
    width = header[1] if header else None
    for line_no, raw in enumerate(lines[first:], start=first + 1):
        if not raw.strip():
            # with T=0 every neuron row is blank
            if width == 0:
                rows.append(np.empty(0, np.int64))
            continue
        cells = np.asarray(raw.split(','))
        if width is None:
            width = cells.shape[0]
        if cells.shape[0] != width:
            raise SpikeFormatError(f'row has {cells.shape[0]} columns, expected {width}',
                                   path, line_no)
        ones = cells == '1'
        if not (ones | (cells == '0')).all():
            bad = cells[~(ones | (cells == '0'))][0]
            raise SpikeFormatError(f'non-binary value {bad!r}', path, line_no)
        rows.append(np.flatnonzero(ones))
    if header and len(rows) != header[0]:
        raise SpikeFormatError(f'found {len(rows)} rows, header declares N={header[0]}', path, 1)
    n_neurons = len(rows)
    n_bins = width or 0
    neurons = np.concatenate([np.full(r.shape, i, dtype=np.int64) for i, r in enumerate(rows)]) \
        if rows else np.empty(0, np.int64)
    bins = np.concatenate(rows) if rows else np.empty(0, np.int64)
    return SpikeMatrix(n_neurons, n_bins, neurons, bins)


def load_spike_matrix(path, format=None):
    format = format or infer_format(path)
    if format not in FORMATS:
        raise SpikeFormatError(f'unknown format {format!r}, expected one of {FORMATS}', path)
    lines = Path(path).read_text().splitlines()
    X = _load_coo(path, lines) if format == COO_TEXT else _load_dense(path, lines)
    logger.debug('loaded %r from %s', X, path)
    return X


def save_spike_matrix(X, path, format=None):
    format = format or infer_format(path)
    if format not in FORMATS:
        raise SpikeFormatError(f'unknown format {format!r}, expected one of {FORMATS}', path)
    path = Path(path)
    with path.open('w') as out:
        if format == COO_TEXT:
            out.write(f'N={X.n_neurons} T={X.n_bins}\n')
            for n, t in zip(X.neurons.tolist(), X.bins.tolist()):
                out.write(f'{n} {t}\n')
        else:
            out.write(f'# N={X.n_neurons} T={X.n_bins}\n')
            row = np.zeros(X.n_bins, dtype='U1')
            starts = np.searchsorted(X.neurons, np.arange(X.n_neurons + 1))
            for n in range(X.n_neurons):
                row[:] = '0'
                row[X.bins[starts[n]:starts[n + 1]]] = '1'
                out.write(','.join(row.tolist()))
                out.write('\n')
    logger.debug('saved %r to %s', X, path)
    return path
