# spikecore/exceptions.py


class ConvseqError(Exception):
    """Base class for every error raised by the engine."""


class SpikeFormatError(ConvseqError):
    """A spike file does not parse under its declared format."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        location = ''
        if path is not None:
            location = f'{path}'
        if line is not None:
            location = f'{location}:{line}' if location else f'line {line}'
        super().__init__(f'{location}: {message}' if location else message)


class DimensionError(ConvseqError, ValueError):
    """Shapes or lengths of two operands disagree."""


class PermutationError(ConvseqError, ValueError):
    """An index sequence is not a bijection on [0, n)."""


class ParameterError(ConvseqError, ValueError):
    """A numeric argument lies outside its valid range."""
