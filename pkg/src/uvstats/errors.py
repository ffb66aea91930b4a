"""Error taxonomy shared across the package.

The CLI maps these to distinct exit codes, so raising the right class is part
of the public contract: configuration problems, violated mathematical
hypotheses, and numerical failures are never conflated.
"""


class UVStatsError(Exception):
    """Base class for all package errors."""


class ConfigError(UVStatsError):
    """Malformed configuration: unknown keys, unparseable values, missing files."""


class PreconditionError(UVStatsError):
    """An operation's documented precondition does not hold for the inputs."""


class HypothesisError(UVStatsError):
    """A mathematical hypothesis (moment condition, mixing admissibility,
    bandwidth schedule, assumption check) fails for the requested configuration."""


class DivergenceError(HypothesisError):
    """A tail-exponent test shows an integral or norm diverges.

    Carries enough context to name the offending component and tail side.
    """

    def __init__(self, message, component=None, side=None):
        super().__init__(message)
        self.component = component
        self.side = side


class NumericError(UVStatsError):
    """A numerical routine failed (factorization, non-PSD beyond tolerance,
    internal identity violated)."""
