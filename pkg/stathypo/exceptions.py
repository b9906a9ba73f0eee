from spikecore.exceptions import ConvseqError


class ScoringError(ConvseqError, ValueError):
    pass
