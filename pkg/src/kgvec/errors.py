"""Exception types shared across the package."""


class KgvecError(Exception):
    """Base class for all kgvec errors."""


class ConfigError(KgvecError):
    """Invalid or inconsistent configuration (bad ranges, missing inputs)."""


class ParseError(KgvecError):
    """A data file could not be parsed; message includes the line number."""


class EmptyCorpusError(KgvecError):
    """The corpus produced no tokens."""


class EmptyKGError(KgvecError):
    """No triples survived loading/filtering."""


class DegenerateDistributionError(KgvecError):
    """All sampling weights are zero."""


class CorruptionExhaustedError(KgvecError):
    """No valid corrupted triple was found within the attempt budget."""


class CheckpointError(KgvecError):
    """Checkpoint file is missing, truncated, or has a wrong magic/version."""


class NumericError(KgvecError):
    """A non-finite value appeared where a finite one is required."""


class UndefinedCorrelationError(KgvecError):
    """Rank correlation is undefined (fewer than two points or constant list)."""
