# optengine/adam.py
from dataclasses import dataclass

import numpy as np

from spikecore.exceptions import DimensionError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass(frozen=True, eq=False)
class AdamState:
    """First and second moment estimates plus the number of steps taken."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls(np.zeros_like(params, dtype=np.float64), np.zeros_like(params, dtype=np.float64))


def adam_step(params, grads, state, lrate, beta1=BETA1, beta2=BETA2, epsilon=EPSILON):
    """One bias-corrected Adam update. Inputs are left untouched."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if state is None:
        state = AdamState.zeros_like(params)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise DimensionError(f'parameters {params.shape}, gradients {grads.shape} and '
                             f'moments {state.m.shape} must share a shape')
    step = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * (grads * grads)
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    updated = params - lrate * m_hat / (np.sqrt(v_hat) + epsilon)
    return updated, AdamState(m, v, step)
