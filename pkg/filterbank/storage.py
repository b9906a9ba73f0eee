# filterbank/storage.py
"""Filter banks on disk: a JSON header plus the parameter array."""

import json
from pathlib import Path

from spikecore.exceptions import SpikeFormatError

from .bank import FilterBank

FORMAT_NAME = 'convseq-filterbank'
FORMAT_VERSION = 1


def bank_to_dict(bank):
    return {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'variant': bank.variant,
        'n_neurons': bank.n_neurons,
        'width': bank.width,
        'n_filters': bank.n_filters,
        'sigma': bank.sigma,
        'normalized': bank.normalized,
        'params': bank.params.tolist(),
    }


def bank_from_dict(data, path=None):
    if data.get('format') != FORMAT_NAME:
        raise SpikeFormatError(f'not a filter bank file (format={data.get("format")!r})', path)
    if data.get('version') != FORMAT_VERSION:
        raise SpikeFormatError(f'unsupported filter bank version {data.get("version")!r}', path)
    try:
        return FilterBank(data['variant'], data['n_neurons'], data['width'], data['n_filters'],
                          data['params'], sigma=data.get('sigma'),
                          normalized=data.get('normalized', True))
    except KeyError as exc:
        raise SpikeFormatError(f'filter bank file lacks field {exc}', path) from None


def save_bank(bank, path):
    path = Path(path)
    path.write_text(json.dumps(bank_to_dict(bank)))
    return path


def load_bank(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpikeFormatError(f'invalid JSON: {exc.msg}', path, exc.lineno) from None
    return bank_from_dict(data, path)
