"""Time-dependent tridiagonal generators of the amplitude dynamics.

Both quantizations lead to ``i c' = M(tau) c`` with

    M[m, m]   = (m + 1/2) + d(tau)
    M[m, m+1] = g(tau) sqrt(m + 1)
    M[m+1, m] = conj(g(tau)) sqrt(m + 1)

so ``M = N + 1/2 + d + g a + conj(g) a^+``. Only the scalar shift ``d`` and
the coupling ``g`` depend on the quantization.

Hamiltonian mode (``H``)::

    d = 0,   g = -lam sin(rho tau)

Constant-of-motion mode (``K``), obtained by dividing the dimensionful
amplitude equations by ``hbar omega``::

    d = -lam^2 / (rho^2 - 1) sin^2(rho tau)
    g =  lam / (rho^2 - 1) (sin(rho tau) - i rho cos(rho tau))

with ``lam = epsilon rho sqrt(hbar_bar / 2)``. The derivation is written
out in ``docs/derivation.md``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError
from .fock import MIN_DIM, FockState, Params, ladder_coefficients


class Mode(str, Enum):
    K = "k"
    H = "h"

    @classmethod
    def parse(cls, value) -> Mode:
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameterError(f"unknown mode {value!r}, expected 'k' or 'h'") from None


@dataclass(frozen=True)
class Generator:
    """Hermitian tridiagonal generator evaluated on demand at any ``tau``."""

    mode: Mode
    params: Params
    diag_shift: Callable[[float], float]
    coupling: Callable[[float], complex]
    label: str = ""

    def coefficients(self, tau: float) -> tuple[float, complex]:
        return self.diag_shift(tau), self.coupling(tau)

    def dense(self, dim: int, tau: float) -> np.ndarray:
        """Assemble the full ``dim x dim`` matrix at ``tau``."""
        if dim < MIN_DIM:
            raise InvalidDimensionError(f"dim must be >= {MIN_DIM}, got {dim}")
        d, g = self.coefficients(tau)
        sq = ladder_coefficients(dim)
        out = np.diag(np.arange(dim) + 0.5 + d).astype(np.complex128)
        out += np.diag(g * sq, 1) + np.diag(np.conj(g) * sq, -1)
        return out

    def scaled(self, factor: float) -> Generator:
        """Copy with the coupling multiplied by ``factor`` (mutation testing)."""
        coupling = self.coupling
        return Generator(
            self.mode,
            self.params,
            self.diag_shift,
            lambda tau: factor * coupling(tau),
            label=f"{self.label or self.mode.value}*{factor:g}",
        )


def build_h_generator(params: Params) -> Generator:
    lam, rho = params.lam, params.rho

    def diag_shift(tau):
        return 0.0

    def coupling(tau):
        return complex(-lam * math.sin(rho * tau), 0.0)

    return Generator(Mode.H, params, diag_shift, coupling, label="h")


def build_k_generator(params: Params, printed_coefficients: bool = False) -> Generator:
    """Constant-of-motion generator.

    ``printed_coefficients=True`` swaps in the literal (dimensionally
    inconsistent) prefactors ``eps sqrt(2 hbar_bar) (1 - rho)`` for the
    coupling and ``eps^2 / (2 hbar_bar (1 - rho^2))`` for the diagonal.
    It exists for side-by-side comparison only.
    """
    rho = params.rho
    if printed_coefficients:
        eps, hb = params.epsilon, params.hbar_bar
        shift = eps**2 / (2.0 * hb * (1.0 - rho**2))
        scale = eps * math.sqrt(2.0 * hb) * (1.0 - rho)
        label = "k-printed"
    else:
        shift = params.lam**2 / (rho**2 - 1.0)
        scale = params.lam / (rho**2 - 1.0)
        label = "k"

    def diag_shift(tau):
        s = math.sin(rho * tau)
        return -shift * s * s

    def coupling(tau):
        return complex(scale * math.sin(rho * tau), -scale * rho * math.cos(rho * tau))

    return Generator(Mode.K, params, diag_shift, coupling, label=label)


def build_generator(mode, params: Params) -> Generator:
    mode = Mode.parse(mode)
    return build_k_generator(params) if mode is Mode.K else build_h_generator(params)


def matvec(c: np.ndarray, d: float, g: complex, sq: np.ndarray, levels=None) -> np.ndarray:
    """``M c`` for coefficients ``(d, g)``.

    ``sq`` is ``ladder_coefficients(len(c))``; ``levels`` optionally caches
    ``arange(len(c)) + 0.5``.
    """
    if levels is None:
        levels = np.arange(c.size) + 0.5
    out = (levels + d) * c
    out[:-1] += g * sq * c[1:]
    out[1:] += np.conj(g) * sq * c[:-1]
    return out


def apply_generator(gen: Generator, state: FockState, tau: float) -> FockState:
    """Return ``M(tau) c``. The propagated equation is ``c' = -i M(tau) c``."""
    d, g = gen.coefficients(tau)
    out = matvec(state.amplitudes, d, g, ladder_coefficients(state.dim))
    return FockState(out, tau)


def hermiticity_audit(gen: Generator, dim: int, taus) -> float:
    """Largest ``|M - M^+|`` entry over the sampled times."""
    worst = 0.0
    for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
        m = gen.dense(dim, float(tau))
        worst = max(worst, float(np.max(np.abs(m - m.conj().T))))
    return worst
