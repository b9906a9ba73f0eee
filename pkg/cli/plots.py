# cli/plots.py
"""
Static SVG figures of a fit: rasters before and after sorting, response
traces with the significance line, and loss curves.

Figures are built on ``matplotlib.figure.Figure`` (no pyplot state) with a
fixed SVG hash salt and no date stamp, so identical inputs give
byte-identical files.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use('Agg')

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from spikecore.matrix import reorder_rows  # noqa: E402

logger = logging.getLogger(__name__)

SVG_SALT = 'convseq'
RASTER_MARKER = 0.5


def _save(fig, path):
    with matplotlib.rc_context({'svg.hashsalt': SVG_SALT, 'svg.fonttype': 'path'}):
        fig.savefig(path, format='svg', metadata={'Date': None})
    return Path(path)


def _raster(X, title):
    fig = Figure(figsize=(10, 4))
    ax = fig.add_subplot()
    ax.scatter(X.bins, X.neurons, s=RASTER_MARKER, c='k', marker='s', linewidths=0)
    ax.set_xlim(0, max(X.n_bins - 1, 1))
    ax.set_ylim(X.n_neurons - 0.5, -0.5)
    ax.set_xlabel('time bin')
    ax.set_ylabel('neuron')
    ax.set_title(title)
    return fig


def plot_raster(X, path, title='spike raster'):
    return _save(_raster(X, title), path)


def plot_traces(traces, path, alpha=None, detections=None):
    """One panel per filter; the significance line is drawn only when ``alpha`` is known."""
    traces = list(traces)
    fig = Figure(figsize=(10, 2.2 * max(len(traces), 1)))
    axes = fig.subplots(max(len(traces), 1), 1, sharex=True, squeeze=False)[:, 0]
    for k, (ax, trace) in enumerate(zip(axes, traces)):
        values = np.asarray(getattr(trace, 'values', trace))
        ax.plot(np.arange(values.size), values, color='C0', linewidth=0.6)
        if alpha is not None:
            ax.axhline(alpha, color='C3', linestyle='--', linewidth=0.8, label='alpha')
        if detections is not None and k < len(detections) and detections[k]:
            bins, peaks = zip(*detections[k])
            ax.plot(bins, peaks, 'v', color='C3', markersize=3)
        ax.set_ylabel(f'filter {k}')
    axes[-1].set_xlabel('time bin')
    return _save(fig, path)


def plot_losses(loss_history, path):
    fig = Figure(figsize=(8, 5))
    top, bottom = fig.subplots(2, 1, sharex=True)
    steps = np.arange(len(loss_history))
    top.plot(steps, [entry.total for entry in loss_history], color='k')
    top.set_ylabel('loss')
    if loss_history:
        variances = np.array([entry.per_filter_variance for entry in loss_history])
        for k in range(variances.shape[1]):
            bottom.plot(steps, variances[:, k], label=f'filter {k}')
        bottom.legend(loc='lower right', fontsize='small')
    bottom.set_ylabel('trace variance')
    bottom.set_xlabel('step')
    return _save(fig, path)


def emit_plots(fit_result, detections, out_dir, X=None, calibration=None, sort_results=None):
    """Write every figure for ``fit_result`` into ``out_dir`` and return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if X is not None:
        written.append(plot_raster(X, out_dir / 'raster.svg', 'raster before sorting'))
        for result in sort_results or ():
            k = result.filter_index
            written.append(plot_raster(reorder_rows(X, result.order),
                                       out_dir / f'raster_sorted_k{k}.svg',
                                       f'raster sorted by filter {k}'))
    alpha = getattr(calibration, 'alpha', calibration)
    if alpha is None:
        logger.warning('no calibration supplied; trace plot drawn without the significance line')
    written.append(plot_traces(fit_result.traces, out_dir / 'traces.svg', alpha, detections))
    written.append(plot_losses(fit_result.loss_history, out_dir / 'loss.svg'))
    return written
