# cli/config.py
"""
Resolution of run settings for one subcommand.

A value comes from the first of: the command-line flag, the subcommand's
table in the ``--config`` file (``[fit]``, ``[null]`` ...), the top level of
that file, ``settings.CONVSEQ``. The seed additionally falls back to the
``CONVSEQ_SEED`` environment variable before settling on 0.
"""

import json
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError

# key -> (lower bound, strict)
LOWER_BOUNDS = {
    'M': (1, False),
    'K': (1, False),
    'n_steps': (1, False),
    'lrate': (0, True),
    'beta_tv': (0, False),
    'beta_xcor': (0, False),
    'j': (0, False),
    'sigma': (0, True),
    'init_scale': (0, True),
    'n_null': (2, False),
    'margin': (0, False),
    'window': (1, False),
    'early_stop': (1, False),
    'bench_workers': (1, False),
    'n_seeds': (1, False),
    'workers': (1, False),
    'type_index': (0, False),
}

CHOICES = {
    'variant': ('direct', 'gaussian'),
    'null_family': (None, 'direct', 'gaussian', 'stochastic'),
    'format': (None, 'coo-text', 'dense-csv'),
}


def load_config_file(path):
    path = Path(path)
    if not path.exists():
        raise ValidationError({'config': [f'config file {path} does not exist']})
    try:
        if path.suffix.lower() == '.toml':
            with path.open('rb') as handle:
                return tomllib.load(handle)
        with path.open(encoding='utf-8') as handle:
            data = json.load(handle)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError({'config': [f'cannot parse {path}: {exc}']}) from exc
    if not isinstance(data, dict):
        raise ValidationError({'config': [f'{path} must hold a table of settings']})
    return data


@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    out_dir: Path = Path('out')
    params: dict = field(default_factory=dict)
    inputs: tuple = ()
    config_path: str = None

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        value = self.params.get(key)
        return default if value is None else value

    @property
    def n_filters(self):
        return int(self.params.get('K') or 1)

    @property
    def beta_xcor(self):
        """Cross-correlation weight; a single filter has nothing to decorrelate."""
        if self.n_filters == 1:
            return 0.0
        value = self.params.get('beta_xcor')
        return 10.0 if value is None else float(value)

    def output(self, name):
        return self.out_dir / name

    def to_dict(self):
        params = {key: str(value) if isinstance(value, Path) else value
                  for key, value in self.params.items()}
        return {
            'subcommand': self.subcommand,
            'seed': self.seed,
            'out_dir': str(self.out_dir),
            'config_path': self.config_path,
            'params': params,
        }


def _seed_fallback(file_values):
    if file_values.get('seed') is not None:
        return file_values['seed']
    env = os.environ.get('CONVSEQ_SEED')
    if env not in (None, ''):
        return env
    return settings.CONVSEQ.get('seed', 0) or 0


def resolve(subcommand, options, keys=(), input_keys=(), required=()):
    """Build a validated ``RunConfig`` from parsed command options."""
    file_values = {}
    config_path = options.get('config')
    if config_path:
        data = load_config_file(config_path)
        file_values = {key: value for key, value in data.items() if not isinstance(value, dict)}
        file_values.update(data.get(subcommand) or {})

    defaults = settings.CONVSEQ
    params = {}
    for key in keys:
        value = options.get(key)
        if value is None:
            value = file_values.get(key)
        if value is None:
            value = defaults.get(key)
        params[key] = value

    seed = options.get('seed')
    if seed is None:
        seed = _seed_fallback(file_values)
    out_dir = options.get('out_dir') or file_values.get('out_dir') or defaults.get('out_dir', 'out')

    errors = {}
    try:
        seed = int(seed)
        if seed < 0:
            errors['seed'] = [f'seed must be non-negative, got {seed}']
    except (TypeError, ValueError):
        errors['seed'] = [f'seed must be an integer, got {seed!r}']
    config = RunConfig(subcommand, seed if 'seed' not in errors else 0, Path(out_dir), params,
                       tuple(key for key in input_keys if params.get(key)), config_path)
    errors.update(validate(config, input_keys))
    for key in required:
        if config.params.get(key) in (None, ''):
            errors.setdefault(key, []).append(f'{key} is required')
    if errors:
        raise ValidationError(errors)
    return config


def validate(config, input_keys=()):
    """Per-field problems of ``config``; an empty dict when everything checks out."""
    errors = {}
    for key, value in config.params.items():
        if value is None:
            continue
        if key in LOWER_BOUNDS:
            bound, strict = LOWER_BOUNDS[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                errors.setdefault(key, []).append(f'{key} must be a number, got {value!r}')
            elif value < bound or (strict and value == bound):
                relation = 'greater than' if strict else 'at least'
                errors.setdefault(key, []).append(f'{key} must be {relation} {bound}, got {value}')
        if key in CHOICES and value not in CHOICES[key]:
            allowed = ', '.join(str(choice) for choice in CHOICES[key] if choice is not None)
            errors.setdefault(key, []).append(f'{key} must be one of {allowed}, got {value!r}')
    for key in input_keys:
        path = config.params.get(key)
        if path and not Path(path).exists():
            errors.setdefault(key, []).append(f'{path} does not exist')
    return errors
