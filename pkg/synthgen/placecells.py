# synthgen/placecells.py
"""
2D place cells in a T-maze.

Field centers tile the enclosure on a ``grid_side`` x ``grid_side`` grid. The
neuron index of a cell is its row-major position in that grid, with row 0 at
the top wall, so the field centered 95 cm up and 15 cm from the left wall of
a 130 cm enclosure is element [3, 1].

Every traversal runs at constant speed from the bottom of the vertical arm to
the junction and on to the left or right end of the horizontal arm. Each bin
emits exactly one spike, drawn from the cells in proportion to a Gaussian of
their distance to the animal.
"""

import logging

import numpy as np

from spikecore.matrix import SpikeMatrix, bernoulli_matrix

from .specs import ARMS, FORWARD, LEFT, GroundTruth, Occurrence

logger = logging.getLogger(__name__)

MEMBER_RADIUS_SDS = 2.0


def field_centers(spec):
    """Center (x, y) in cm of every cell, indexed by neuron."""
    step = spec.enclosure_cm / spec.grid_side
    coords = step / 2 + step * np.arange(spec.grid_side)
    rows, cols = np.divmod(np.arange(spec.n_cells), spec.grid_side)
    x = coords[cols]
    y = coords[spec.grid_side - 1 - rows]
    return np.column_stack([x, y])


def grid_element(spec, x_cm, y_cm):
    """(row, col) of the cell whose field is centered at (x_cm, y_cm)."""
    step = spec.enclosure_cm / spec.grid_side
    col = int(round((x_cm - step / 2) / step))
    row = spec.grid_side - 1 - int(round((y_cm - step / 2) / step))
    return row, col


def maze_waypoints(spec, arm):
    step = spec.enclosure_cm / spec.grid_side
    low, high = step / 2, spec.enclosure_cm - step / 2
    middle = spec.enclosure_cm / 2
    end = low if arm == LEFT else high
    return np.array([[middle, low], [middle, high], [end, high]])


def maze_position(spec, arm, phase):
    """Position along the arm's path at ``phase`` in [0, 1]."""
    waypoints = maze_waypoints(spec, arm)
    lengths = np.linalg.norm(np.diff(waypoints, axis=0), axis=1)
    along = np.asarray(phase, dtype=np.float64) * lengths.sum()
    first = along <= lengths[0]
    t1 = np.clip(along / lengths[0], 0, 1)
    t2 = np.clip((along - lengths[0]) / lengths[1], 0, 1)
    leg1 = waypoints[0] + t1[..., None] * (waypoints[1] - waypoints[0])
    leg2 = waypoints[1] + t2[..., None] * (waypoints[2] - waypoints[1])
    return np.where(first[..., None], leg1, leg2)


def arm_schedule(spec, rng):
    if spec.arm_schedule:
        return [spec.arm_schedule[i % len(spec.arm_schedule)] for i in range(spec.n_traversals)]
    return [ARMS[i] for i in rng.integers(0, 2, size=spec.n_traversals)]


def trajectory(spec, arms):
    """Animal position for every bin."""
    t = np.arange(spec.n_bins)
    traversal = t // spec.traversal_period
    phase = (t % spec.traversal_period) / max(spec.traversal_period - 1, 1)
    positions = np.empty((spec.n_bins, 2))
    for arm in ARMS:
        mask = np.array([arms[i] == arm for i in traversal])
        if mask.any():
            positions[mask] = maze_position(spec, arm, phase[mask])
    return positions


def simulate_place_cells(spec, rng, arms):
    """One neuron index per bin, before jitter and background noise."""
    centers = field_centers(spec)
    positions = trajectory(spec, arms)
    sq_dist = ((positions[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    weights = np.exp(-(sq_dist - sq_dist.min(axis=1, keepdims=True)) / (2 * spec.field_sd_cm ** 2))
    cumulative = np.cumsum(weights / weights.sum(axis=1, keepdims=True), axis=1)
    draws = rng.random(spec.n_bins)
    neurons = (cumulative < draws[:, None]).sum(axis=1)
    return np.minimum(neurons, spec.n_cells - 1)


def arm_members(spec, arm):
    """Cells within reach of the arm's path, ordered by when the path passes them."""
    centers = field_centers(spec)
    path = maze_position(spec, arm, np.linspace(0.0, 1.0, 721))
    dist = np.linalg.norm(path[:, None, :] - centers[None, :, :], axis=2)
    closest = dist.min(axis=0)
    when = dist.argmin(axis=0)
    members = np.flatnonzero(closest <= MEMBER_RADIUS_SDS * spec.field_sd_cm)
    return tuple(int(n) for n in members[np.argsort(when[members], kind='stable')])


def generate_place_cell_dataset(spec, seed):
    """Simulated place-cell raster with one ground-truth occurrence per traversal.

    Sequence type 0 is the left arm, type 1 the right arm.
    """
    rng = np.random.default_rng(seed)
    arms = arm_schedule(spec, rng)
    neurons = simulate_place_cells(spec, rng, arms)
    bins = np.arange(spec.n_bins)
    if spec.jitter_sd > 0:
        bins = np.rint(bins + rng.normal(0.0, spec.jitter_sd, spec.n_bins)).astype(np.int64)
    inside = (bins >= 0) & (bins < spec.n_bins)
    cells = SpikeMatrix.merged(spec.n_cells, spec.n_bins, neurons[inside], bins[inside])
    noise = bernoulli_matrix(spec.n_cells, spec.n_bins, spec.background_density,
                             seed=int(rng.integers(1 << 32)))
    occurrences = []
    for i, arm in enumerate(arms):
        start = i * spec.traversal_period
        end = min(start + spec.traversal_period, spec.n_bins)
        occurrences.append(Occurrence(ARMS.index(arm), (start + end - 1) // 2, FORWARD, 1.0))
    truth = GroundTruth(tuple(occurrences), tuple(arm_members(spec, arm) for arm in ARMS))
    X = SpikeMatrix.union(cells, noise)
    logger.info('simulated %d place cells over %d bins (%d traversals)',
                spec.n_cells, spec.n_bins, len(arms))
    return X, truth
