"""Truncated Fock-basis representation of a single oscillator mode.

States are amplitude vectors ``c[0..N-1]`` over number states ``|n>``.
Positions are measured in the dimensionless units where
``x = sqrt(hbar_bar / 2) (a + a^+)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HermiticityError, InvalidDimensionError, InvalidParameterError, ResonanceError

log = logging.getLogger(__name__)

#: Minimum basis size.
MIN_DIM = 2


@dataclass(frozen=True)
class Params:
    """Dimensionless drive parameters.

    Attributes
    ----------
    epsilon : float
        Drive amplitude ``A / (hbar Omega)``.
    hbar_bar : float
        Reduced Planck constant in oscillator units, ``hbar / (m omega)``.
    rho : float
        Frequency ratio ``Omega / omega``. Must differ from 1.
    """

    epsilon: float
    hbar_bar: float = 0.4
    rho: float = 6.25
    lam: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("epsilon", "hbar_bar", "rho"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.epsilon < 0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.hbar_bar <= 0:
            raise InvalidParameterError(f"hbar_bar must be > 0, got {self.hbar_bar}")
        if self.rho <= 0:
            raise InvalidParameterError(f"rho must be > 0, got {self.rho}")
        if self.rho == 1.0:
            raise ResonanceError("rho == 1 (resonant drive) is not supported")
        object.__setattr__(
            self, "lam", self.epsilon * self.rho * math.sqrt(self.hbar_bar / 2.0)
        )

    @property
    def drive_period(self) -> float:
        """Drive period in units of tau."""
        return 2.0 * math.pi / self.rho

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "hbar_bar": self.hbar_bar,
            "rho": self.rho,
            "lambda": self.lam,
        }


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FockState:
    """Immutable truncated amplitude vector at time ``tau``."""

    amplitudes: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True).ravel()
        if amps.size < MIN_DIM:
            raise InvalidDimensionError(f"dim must be >= {MIN_DIM}, got {amps.size}")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def padded(self, dim: int) -> FockState:
        """Return the same state zero-padded to ``dim`` levels."""
        if dim < self.dim:
            raise InvalidDimensionError(f"cannot pad dim {self.dim} down to {dim}")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[: self.dim] = self.amplitudes
        return FockState(amps, self.tau)

    def with_phase(self, phi: float) -> FockState:
        return FockState(np.exp(1j * phi) * self.amplitudes, self.tau)


@dataclass(frozen=True)
class X2Matrix:
    """Banded representation of ``x^2`` in the number basis.

    ``diag[n] = <n|x^2|n>`` and ``off2[n] = <n|x^2|n+2>``; every other
    element vanishes.
    """

    diag: np.ndarray
    off2: np.ndarray

    @classmethod
    def build(cls, dim: int, hbar_bar: float) -> X2Matrix:
        if dim < MIN_DIM:
            raise InvalidDimensionError(f"dim must be >= {MIN_DIM}, got {dim}")
        n = np.arange(dim, dtype=float)
        diag = (2.0 * n + 1.0) * hbar_bar / 2.0
        m = np.arange(dim - 2, dtype=float)
        off2 = np.sqrt((m + 1.0) * (m + 2.0)) * hbar_bar / 2.0
        return cls(_frozen(diag), _frozen(off2))

    @property
    def dim(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        out = np.diag(self.diag)
        if self.off2.size:
            out += np.diag(self.off2, 2) + np.diag(self.off2, -2)
        return out


def vacuum_state(dim: int) -> FockState:
    """Ground state ``|0>`` in a basis of ``dim`` levels, at ``tau = 0``."""
    if dim < MIN_DIM:
        raise InvalidDimensionError(f"dim must be >= {MIN_DIM}, got {dim}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[0] = 1.0
    return FockState(amps, 0.0)


def ladder_coefficients(dim: int) -> np.ndarray:
    """``sqrt(n + 1)`` for ``n = 0 .. dim - 2`` (matrix elements of ``a``)."""
    return np.sqrt(np.arange(1, dim, dtype=float))


def apply_lowering(state: FockState) -> FockState:
    """Apply ``a``: amplitude ``c_n`` moves to ``n - 1`` scaled by ``sqrt(n)``."""
    c = state.amplitudes
    out = np.zeros_like(c)
    out[:-1] = ladder_coefficients(state.dim) * c[1:]
    return FockState(out, state.tau)


def apply_raising(state: FockState) -> tuple[FockState, float]:
    """Apply ``a^+`` inside the truncation window.

    Returns the raised state and the leakage, i.e. the squared magnitude
    of the component pushed above the top level and discarded.
    """
    c = state.amplitudes
    out = np.zeros_like(c)
    out[1:] = ladder_coefficients(state.dim) * c[:-1]
    leaked = math.sqrt(state.dim) * c[-1]
    return FockState(out, state.tau), float(abs(leaked) ** 2)


def norm_squared(state: FockState) -> float:
    c = state.amplitudes
    return float(np.vdot(c, c).real)


def _x2_complex(c: np.ndarray, x2: X2Matrix) -> complex:
    val = np.vdot(c, x2.diag * c)
    if x2.off2.size:
        val += np.vdot(c[:-2], x2.off2 * c[2:]) + np.vdot(c[2:], x2.off2 * c[:-2])
    return complex(val)


def x2_expectation(state: FockState, params: Params, x2: X2Matrix | None = None) -> float:
    """Expectation value of ``x^2`` in the (normalized) state.

    A state off unit norm by more than 1e-6 is logged but still evaluated.
    Raises :class:`HermiticityError` if the imaginary residue exceeds
    ``1e-9 * norm^2``.
    """
    if x2 is None or x2.dim != state.dim:
        x2 = X2Matrix.build(state.dim, params.hbar_bar)
    n2 = norm_squared(state)
    if abs(n2 - 1.0) > 1e-6:
        log.warning("x2_expectation on unnormalized state (norm^2=%.12g)", n2)
    val = _x2_complex(state.amplitudes, x2)
    if abs(val.imag) > 1e-9 * max(n2, np.finfo(float).tiny):
        raise HermiticityError(f"<x^2> has imaginary part {val.imag:.3e}")
    return val.real
