# optengine/training.py
import logging
from dataclasses import dataclass, field

import numpy as np

from spikecore.exceptions import ConvseqError
from stathypo.null import calibrate_null
from stathypo.peaks import count_detections

from .adam import adam_step
from .convolution import ResponseTrace
from .objective import evaluate

logger = logging.getLogger(__name__)


class FitConfigError(ConvseqError, ValueError):
    pass


@dataclass(frozen=True)
class FitConfig:
    """
    Full-batch training settings. ``j=None`` means a lag bound of M.
    ``early_stop`` is the number of significant peaks (summed over filters)
    at which training stops.
    """

    n_steps: int = 100
    lrate: float = 0.1
    beta_tv: float = 100.0
    beta_xcor: float = 10.0
    j: int = None
    early_stop: int = None
    seed: int = 0
    log_every: int = 10
    n_null: int = 1000
    z: float = 4.0

    def __post_init__(self):
        if self.n_steps < 1:
            raise FitConfigError(f'n_steps must be at least 1, got {self.n_steps}')
        if self.lrate <= 0:
            raise FitConfigError(f'lrate must be positive, got {self.lrate}')
        if self.j is not None and self.j < 0:
            raise FitConfigError(f'j must be non-negative, got {self.j}')
        if self.early_stop is not None and self.early_stop < 1:
            raise FitConfigError(f'early_stop must be at least 1, got {self.early_stop}')


@dataclass
class FitResult:
    bank: object
    traces: list
    loss_history: list = field(default_factory=list)
    steps_run: int = 0
    stopped_early: bool = False
    alpha: float = None

    @property
    def final_loss(self):
        return self.loss_history[-1] if self.loss_history else None

    def trace_matrix(self):
        return np.vstack([trace.values for trace in self.traces])


def fit(X, bank, config, alpha=None):
    """Optimize ``bank`` on ``X`` with Adam for ``config.n_steps`` steps.

    With ``config.early_stop`` set, ``alpha`` is calibrated on ``X`` when not
    given, and training stops before the first step whose traces already hold
    the requested number of significant peaks.
    """
    if config.early_stop is not None and alpha is None:
        alpha = calibrate_null(X, bank.width, bank.variant, config.n_null, config.z, config.seed,
                               sigma=bank.sigma, normalized=bank.normalized).alpha
    history = []
    state = None
    stopped_early = False
    traces = None
    steps_run = 0
    for step in range(config.n_steps):
        traces, breakdown, grads = evaluate(bank, X, config)
        if config.early_stop is not None and \
                count_detections(traces, alpha, bank.width) >= config.early_stop:
            stopped_early = True
            logger.info('early stop at step %d: %d significant peaks at alpha=%.4f',
                        step, config.early_stop, alpha)
            break
        history.append(breakdown)
        if config.log_every and step % config.log_every == 0:
            logger.debug('step %d: loss=%.6f var=%s', step, breakdown.total,
                         ', '.join(f'{v:.5f}' for v in breakdown.per_filter_variance))
        # optimize u = params / scale, so dL/du = scale * dL/dparams
        scale = bank.step_scale
        params, state = adam_step(bank.params / scale, grads * scale, state, config.lrate)
        bank = bank.with_params(params * scale)
        steps_run = step + 1
    if not stopped_early:
        traces = evaluate(bank, X, config, with_gradient=False)[0]
    logger.info('fit finished after %d steps (K=%d, M=%d, %s), final loss %.6f',
                steps_run, bank.n_filters, bank.width, bank.variant,
                history[-1].total if history else float('nan'))
    return FitResult(bank, [ResponseTrace(values, k) for k, values in enumerate(traces)],
                     history, steps_run, stopped_early, alpha)
