"""Quantities reported from a propagated trajectory."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HermiticityError, InvalidParameterError
from .fock import FockState, Params, X2Matrix

#: Occupation threshold for counting a level as involved in the dynamics.
CENSUS_THRESHOLD = 1e-4


@dataclass
class TimeSeries:
    """Sampled trajectory.

    ``amplitudes`` and ``probs`` have shape ``(n_samples, dim)`` where
    ``dim`` is the largest basis size reached; samples taken before a basis
    enlargement are zero-padded.
    """

    taus: np.ndarray
    amplitudes: np.ndarray
    probs: np.ndarray
    norm2: np.ndarray
    x2: np.ndarray
    meta: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.probs.shape[1]

    @property
    def final_state(self) -> FockState:
        return FockState(self.amplitudes[-1], self.taus[-1])

    def state_at(self, index: int) -> FockState:
        return FockState(self.amplitudes[index], self.taus[index])

    def highest_level(self, floor: float = 1e-12) -> int:
        """Highest level whose probability ever exceeds ``floor``."""
        hit = np.nonzero(np.any(self.probs > floor, axis=0))[0]
        return int(hit[-1]) if hit.size else 0


@dataclass(frozen=True)
class CensusResult:
    epsilon: float
    mode: str
    max_involved: int
    threshold: float
    tau_at_max: float = 0.0


def level_probabilities(state: FockState) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def x2_series(amplitudes, params: Params) -> np.ndarray:
    """Per-sample ``<x^2>`` for a stack of amplitude vectors (rows)."""
    c = np.atleast_2d(np.asarray(amplitudes, dtype=np.complex128))
    x2 = X2Matrix.build(c.shape[1], params.hbar_bar)
    cc = c.conj()
    val = np.einsum("sn,n,sn->s", cc, x2.diag, c)
    if x2.off2.size:
        val = val + np.einsum("sn,n,sn->s", cc[:, :-2], x2.off2, c[:, 2:])
        val = val + np.einsum("sn,n,sn->s", cc[:, 2:], x2.off2, c[:, :-2])
    norm2 = np.einsum("sn,sn->s", cc, c).real
    bad = np.abs(val.imag) > 1e-9 * np.maximum(norm2, np.finfo(float).tiny)
    if np.any(bad):
        worst = float(np.max(np.abs(val.imag)))
        raise HermiticityError(f"<x^2> has imaginary part {worst:.3e}")
    return val.real


def _counts(probs: np.ndarray, threshold: float) -> np.ndarray:
    return np.count_nonzero(probs > threshold, axis=1)


def excited_census(series: TimeSeries, threshold: float = CENSUS_THRESHOLD) -> CensusResult:
    """Largest number of levels with probability above ``threshold`` at any sample.

    The ground state is counted like any other level.
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidParameterError(f"threshold must lie in (0, 1), got {threshold}")
    counts = _counts(series.probs, threshold)
    i = int(np.argmax(counts))
    params = series.meta.get("params", {})
    return CensusResult(
        epsilon=float(params.get("epsilon", float("nan"))),
        mode=str(series.meta.get("mode", "")),
        max_involved=int(counts[i]),
        threshold=threshold,
        tau_at_max=float(series.taus[i]),
    )


def peak_summary(series: TimeSeries, level: int, tau_min: float | None = None) -> tuple[float, float]:
    """Maximum of ``p_level`` over samples and the earliest time it occurs.

    With ``tau_min`` set, only samples with ``tau > tau_min`` are considered.
    """
    if not 0 <= level < series.dim:
        raise InvalidParameterError(f"level {level} outside basis of size {series.dim}")
    p = series.probs[:, level]
    taus = series.taus
    if tau_min is not None:
        keep = taus > tau_min
        p, taus = p[keep], taus[keep]
        if p.size == 0:
            raise InvalidParameterError(f"no samples after tau_min={tau_min}")
    i = int(np.argmax(p))
    return float(p[i]), float(taus[i])


def time_average(series: TimeSeries, column: str = "x2") -> float:
    """Trapezoidal time average of a sampled column over the whole record."""
    y = getattr(series, column)
    t = series.taus
    if t.size < 2:
        return float(y[0])
    return float(np.trapezoid(y, t) / (t[-1] - t[0]))
