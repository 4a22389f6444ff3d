"""Exception hierarchy shared by all modules."""


class ErdyError(Exception):
    """Base class for errors raised by erdy_meanfield."""


class DegenerateParametersError(ErdyError, ValueError):
    """Graph parameters give a zero (or undefined) normalizer."""


class CapacityError(ErdyError):
    """Requested exact computation exceeds the configured size cap."""


class ModelContractError(ErdyError):
    """A rate model returned a negative off-diagonal rate."""

    def __init__(self, message, to_state=None, from_state=None, phi=None):
        super().__init__(message)
        self.to_state = to_state
        self.from_state = from_state
        self.phi = phi


class SimulationError(ErdyError):
    """The event loop could not continue (e.g. non-finite total rate)."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class IntegrationError(ErdyError):
    """ODE integration failed (step size underflow, non-finite values)."""


class SimplexViolationError(IntegrationError):
    """An ODE solution left the probability simplex beyond tolerance."""


class InvalidInputError(ErdyError, ValueError):
    """Input vector or configuration is malformed."""


class GridMismatchError(ErdyError, ValueError):
    """Two sampled paths do not share the same time grid."""
