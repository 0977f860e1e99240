"""Exception hierarchy shared by the library and the command line."""


class DrivenFockError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(DrivenFockError, ValueError):
    """A parameter set or configuration violates its invariants."""


class ResonanceError(InvalidParameterError):
    """Drive frequency equals the free frequency (rho == 1)."""


class InvalidDimensionError(InvalidParameterError):
    """Basis size below the supported minimum."""


class HermiticityError(DrivenFockError):
    """An expectation value meant to be real came out complex."""


class NumericalError(DrivenFockError):
    """Base class for failures during time stepping."""


class TruncationOverflowError(NumericalError):
    """The tail guard tripped at the maximum allowed basis size."""

    def __init__(self, tau, dim, tail):
        self.tau = tau
        self.dim = dim
        self.tail = tail
        super().__init__(
            f"tail probability {tail:.3e} exceeds guard at max dim {dim} (tau={tau:.6g})"
        )


class StiffnessError(NumericalError):
    """Adaptive step size fell below the underflow limit."""

    def __init__(self, tau, dt):
        self.tau = tau
        self.dt = dt
        super().__init__(f"step size underflow dt={dt:.3e} at tau={tau:.6g}")
