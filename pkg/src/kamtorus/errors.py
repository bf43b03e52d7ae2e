"""Error types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (lattice, schedule, CLI config file, ...)."""


class SmallDivisor(ArithmeticError):
    """A homological divisor fell below the admissible threshold.

    Carries enough context to name the offending combination.
    """

    def __init__(self, message, k=None, blocks=None, value=None):
        super().__init__(message)
        self.k = k
        self.blocks = blocks
        self.value = value


class SolveFailure(ArithmeticError):
    """A linear block solve was too ill-conditioned to trust."""


class ParameterExcluded(RuntimeError):
    """The sampled parameter point violates the nonresonance conditions."""

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class DegreeOverflow(RuntimeError):
    """A polynomial operation exceeded the configured term budget."""


class LieSeriesDiverged(RuntimeError):
    """Lie series tail certificate exceeded the requested tolerance."""

    def __init__(self, message, tail=None):
        super().__init__(message)
        self.tail = tail
