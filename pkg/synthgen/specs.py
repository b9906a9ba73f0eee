# synthgen/specs.py
from dataclasses import dataclass, field

from spikecore.exceptions import ConvseqError

FORWARD = 'forward'
REVERSE = 'reverse'
DIRECTIONS = (FORWARD, REVERSE)

LEFT = 'left'
RIGHT = 'right'
ARMS = (LEFT, RIGHT)


class SpecError(ConvseqError, ValueError):
    """A dataset recipe violates its own constraints."""


@dataclass(frozen=True)
class SequenceSpec:
    """
    One sequence type: which neurons fire, in what order, how often and how
    reliably.

    ``span`` is the number of bins over which the ordered members fire once
    before warping. ``offset`` is the center of the first occurrence (isi//2
    when omitted); further occurrences follow every ``isi`` bins, one per full
    ``isi`` slot of the recording unless ``n_occurrences`` says otherwise.
    """

    member_neurons: tuple
    span: float
    isi: int
    dropout_p: float = 0.0
    jitter_sd: float = 0.0
    direction_schedule: tuple = (FORWARD,)
    warp_factors: tuple = (1.0,)
    offset: int = None
    n_occurrences: int = None

    def __post_init__(self):
        members = tuple(int(n) for n in self.member_neurons)
        object.__setattr__(self, 'member_neurons', members)
        object.__setattr__(self, 'direction_schedule', tuple(self.direction_schedule))
        object.__setattr__(self, 'warp_factors', tuple(float(w) for w in self.warp_factors))
        if not members:
            raise SpecError('a sequence needs at least one member neuron')
        if len(set(members)) != len(members):
            raise SpecError('member neurons must be distinct')
        if min(members) < 0:
            raise SpecError('member neuron indices must be non-negative')
        if not 0.0 <= self.dropout_p <= 1.0:
            raise SpecError(f'dropout_p must lie in [0, 1], got {self.dropout_p}')
        if self.isi <= 0:
            raise SpecError(f'isi must be positive, got {self.isi}')
        if self.span < 0 or self.jitter_sd < 0:
            raise SpecError('span and jitter_sd must be non-negative')
        if not self.warp_factors or min(self.warp_factors) <= 0:
            raise SpecError('warp factors must be positive')
        if not self.direction_schedule or set(self.direction_schedule) - set(DIRECTIONS):
            raise SpecError(f'direction schedule entries must be one of {DIRECTIONS}')
        if self.n_occurrences is not None and self.n_occurrences < 0:
            raise SpecError('n_occurrences must be non-negative')

    @property
    def n_members(self):
        return len(self.member_neurons)

    @property
    def first_center(self):
        return self.isi // 2 if self.offset is None else int(self.offset)

    def centers(self, n_bins):
        """Occurrence centers inside [0, n_bins), one per full isi slot by default."""
        count = n_bins // self.isi if self.n_occurrences is None else self.n_occurrences
        centers = (self.first_center + i * self.isi for i in range(count))
        return [c for c in centers if c < n_bins]


@dataclass(frozen=True)
class Occurrence:
    type_index: int
    center: int
    direction: str = FORWARD
    warp: float = 1.0


@dataclass(frozen=True)
class GroundTruth:
    occurrences: tuple
    members_per_type: tuple = field(default=())

    def __post_init__(self):
        occurrences = tuple(sorted(self.occurrences, key=lambda o: (o.center, o.type_index)))
        object.__setattr__(self, 'occurrences', occurrences)
        object.__setattr__(self, 'members_per_type',
                           tuple(tuple(int(n) for n in m) for m in self.members_per_type))

    @property
    def n_types(self):
        seen = max((o.type_index for o in self.occurrences), default=-1) + 1
        return max(seen, len(self.members_per_type))

    def of_type(self, type_index):
        return [o for o in self.occurrences if o.type_index == type_index]

    def centers(self, type_index=None):
        return [o.center for o in self.occurrences
                if type_index is None or o.type_index == type_index]

    def validate(self, n_bins):
        for o in self.occurrences:
            if not 0 <= o.center < n_bins:
                raise SpecError(f'occurrence center {o.center} outside [0, {n_bins})')
            if not 0 <= o.type_index < self.n_types:
                raise SpecError(f'type index {o.type_index} outside [0, {self.n_types})')


@dataclass(frozen=True)
class PlaceCellSpec:
    """
    Place cells tiling a square enclosure, with a T-maze run every
    ``traversal_period`` bins. ``arm_schedule`` fixes the arm per traversal;
    when empty the arms are drawn at random.

    ``background_density`` and ``jitter_sd`` are the noise applied after
    simulation; the method description gives no values for them.
    """

    grid_side: int = 13
    enclosure_cm: float = 130.0
    field_sd_cm: float = 10.0
    n_bins: int = 6000
    traversal_period: int = 300
    arm_schedule: tuple = ()
    background_density: float = 0.003
    jitter_sd: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, 'arm_schedule', tuple(self.arm_schedule))
        if self.grid_side < 1:
            raise SpecError('grid_side must be at least 1')
        if self.field_sd_cm <= 0:
            raise SpecError(f'field_sd_cm must be positive, got {self.field_sd_cm}')
        if self.enclosure_cm <= 0 or self.traversal_period <= 0 or self.n_bins <= 0:
            raise SpecError('enclosure, traversal period and n_bins must be positive')
        if set(self.arm_schedule) - set(ARMS):
            raise SpecError(f'arm schedule entries must be one of {ARMS}')
        if not 0.0 <= self.background_density <= 1.0 or self.jitter_sd < 0:
            raise SpecError('invalid place-cell noise parameters')

    @property
    def n_cells(self):
        return self.grid_side ** 2

    @property
    def n_traversals(self):
        return -(-self.n_bins // self.traversal_period)
