"""Exception types shared across gmclab modules."""


class GmcLabError(Exception):
    """Base class for all gmclab errors."""


class InterpolationRangeError(GmcLabError):
    """Tabulated kernel queried outside its tabulation range."""


class NotPositiveDefiniteError(GmcLabError):
    """A Gram matrix or spectrum failed a positive-definiteness check."""


class SynthesisAccuracyError(GmcLabError):
    """Clipped spectral mass exceeded the accuracy budget."""


class ResolutionError(GmcLabError):
    """Requested scale is not resolved by the grid (mollifier or Q support)."""


class DomainBoundaryError(GmcLabError):
    """Evaluation point violates the eps-shrunk domain margin."""


class OutOfPhaseError(GmcLabError):
    """Parameter gamma lies outside the phase region required by the operation."""


class OverflowGuardError(GmcLabError):
    """Exponent exceeded the overflow budget (700 natural-log units)."""


class NonConvergenceError(GmcLabError):
    """A quadrature or series failed to converge to tolerance."""


class OffGridAtomError(GmcLabError):
    """Measure atom further than h/2 from any grid site."""


class ConfigError(GmcLabError):
    """Experiment configuration failed schema validation."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))
