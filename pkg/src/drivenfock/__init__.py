"""Driven harmonic oscillator in a truncated Fock basis.

Propagates the amplitude equations of the Hamiltonian and the
constant-of-motion quantizations of an oscillator driven by
``A sin(Omega t)`` and checks them against closed-form oracles.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DrivenFockError,
    HermiticityError,
    InvalidDimensionError,
    InvalidParameterError,
    NumericalError,
    ResonanceError,
    StiffnessError,
    TruncationOverflowError,
)
from .fock import (  # noqa: E402
    FockState,
    Params,
    X2Matrix,
    apply_lowering,
    apply_raising,
    norm_squared,
    vacuum_state,
    x2_expectation,
)
from .generators import (  # noqa: E402
    Generator,
    Mode,
    apply_generator,
    build_generator,
    build_h_generator,
    build_k_generator,
    hermiticity_audit,
)
from .observables import (  # noqa: E402
    CensusResult,
    TimeSeries,
    excited_census,
    level_probabilities,
    peak_summary,
    time_average,
    x2_series,
)
from .propagator import StepControl, TruncationPolicy, propagate, rk4_step, rk45_step  # noqa: E402
