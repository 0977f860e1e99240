"""Time stepping of ``i c'(tau) = M(tau) c`` in a growing truncated basis.

Two integrators are available: classical fixed-step RK4 and the
Dormand-Prince 5(4) embedded pair with PI step-size control. The state is
never renormalized; the norm drift is reported as a fidelity metric.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .errors import InvalidParameterError, StiffnessError, TruncationOverflowError
from .fock import FockState, ladder_coefficients, norm_squared
from .generators import Generator
from .observables import TimeSeries, x2_series
from ._kernels import DP_A, DP_C, DP_E, dp45_kernel, rk4_kernel

log = logging.getLogger(__name__)

METHODS = ("rk4", "rk45")

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
# PI controller exponents for a 5th order pair
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_RK4_NODES = np.array([0.0, 0.5, 1.0])


@dataclass(frozen=True)
class StepControl:
    """Integrator settings. ``dt`` is the fixed step (rk4) or first trial step (rk45)."""

    method: str = "rk45"
    dt: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_step: float = 0.05
    min_step: float = 1e-12

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.dt > 0:
            raise InvalidParameterError(f"dt must be > 0, got {self.dt}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidParameterError("tolerances must be > 0")
        if self.max_step < self.dt:
            raise InvalidParameterError(f"max_step {self.max_step} < dt {self.dt}")


@dataclass(frozen=True)
class TruncationPolicy:
    """Basis growth rule.

    The basis is enlarged by ``growth_factor`` whenever the probability in
    the top two levels exceeds ``tail_guard``.
    """

    initial_dim: int = 64
    tail_guard: float = 1e-16
    growth_factor: float = 2.0
    max_dim: int = 4096

    def __post_init__(self):
        if self.initial_dim < 4:
            raise InvalidParameterError(f"initial_dim must be >= 4, got {self.initial_dim}")
        if not 1.0 < self.growth_factor <= 2.0:
            raise InvalidParameterError(f"growth_factor must lie in (1, 2], got {self.growth_factor}")
        if self.max_dim < self.initial_dim:
            raise InvalidParameterError("max_dim must be >= initial_dim")
        if not self.tail_guard > 0:
            raise InvalidParameterError("tail_guard must be > 0")


class _Coefficients:
    """Stage coefficients of a generator plus per-dimension ladder caches."""

    def __init__(self, gen: Generator):
        self.gen = gen
        self._sq: dict[int, np.ndarray] = {}
        self.nfev = 0

    def sq(self, n: int) -> np.ndarray:
        try:
            return self._sq[n]
        except KeyError:
            return self._sq.setdefault(n, ladder_coefficients(n))

    def at(self, tau: float, h: float, nodes: np.ndarray):
        ds = np.empty(nodes.size)
        gs = np.empty(nodes.size, dtype=np.complex128)
        for i, frac in enumerate(nodes):
            ds[i], gs[i] = self.gen.coefficients(tau + frac * h)
        return ds, gs

    def rk4(self, tau: float, c: np.ndarray, h: float) -> np.ndarray:
        ds, gs = self.at(tau, h, _RK4_NODES)
        self.nfev += 4
        return rk4_kernel(c, ds, gs, h, self.sq(c.size))

    def dp45(self, tau, c, h, k, have_k0, ctrl: StepControl):
        ds, gs = self.at(tau, h, DP_C)
        self.nfev += 6 if have_k0 else 7
        return dp45_kernel(
            c, ds, gs, h, self.sq(c.size), k, have_k0, ctrl.abs_tol, ctrl.rel_tol, DP_A, DP_E
        )


def _factor(err_norm: float, prev_err: float | None, accepted: bool) -> float:
    if err_norm == 0.0:
        return _FAC_MAX
    if accepted and prev_err is not None:
        fac = _SAFETY * err_norm ** -_ALPHA * prev_err ** _BETA
    else:
        fac = _SAFETY * err_norm ** -0.2
    fac = min(_FAC_MAX, max(_FAC_MIN, fac))
    if not accepted:
        fac = min(fac, 1.0)
    return fac


def rk4_step(gen: Generator, state: FockState, tau: float, dt: float) -> FockState:
    """One classical RK4 step from ``tau`` to ``tau + dt`` (``dt`` may be negative)."""
    if dt == 0.0:
        return FockState(state.amplitudes, tau)
    c = _Coefficients(gen).rk4(tau, np.asarray(state.amplitudes), dt)
    return FockState(c, tau + dt)


def rk45_step(
    gen: Generator,
    state: FockState,
    tau: float,
    dt: float,
    ctrl: StepControl | None = None,
    prev_error: float | None = None,
) -> tuple[FockState, bool, float]:
    """Attempt one Dormand-Prince step.

    Returns ``(state, accepted, dt_next)``. On rejection the input state is
    returned unchanged. ``dt_next`` lies in ``[0.2 dt, 5 dt]`` and never
    exceeds ``ctrl.max_step``.
    """
    ctrl = ctrl or StepControl()
    if not dt > 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    if dt < ctrl.min_step:
        raise StiffnessError(tau, dt)
    c = np.asarray(state.amplitudes)
    k = np.empty((7, c.size), dtype=np.complex128)
    c_new, err_norm = _Coefficients(gen).dp45(tau, c, dt, k, False, ctrl)
    accepted = err_norm <= 1.0
    dt_next = min(dt * _factor(err_norm, prev_error, accepted), ctrl.max_step)
    if accepted:
        return FockState(c_new, tau + dt), True, dt_next
    if dt_next < ctrl.min_step:
        raise StiffnessError(tau, dt_next)
    return FockState(c, tau), False, dt_next


def sample_grid(tau_start: float, tau_end: float, sample_every: float) -> np.ndarray:
    """Sample times ``tau_start + k * sample_every`` up to and including ``tau_end``."""
    span = tau_end - tau_start
    n = int(math.floor(span / sample_every + 1e-9))
    taus = tau_start + sample_every * np.arange(n + 1)
    if tau_end - taus[-1] > 1e-9 * max(1.0, abs(tau_end)):
        taus = np.append(taus, tau_end)
    else:
        taus[-1] = tau_end
    return taus


class _Integrator:
    """Mutable stepping state for one propagation run."""

    def __init__(self, gen, ctrl: StepControl, pol: TruncationPolicy, c, tau):
        self.f = _Coefficients(gen)
        self.ctrl = ctrl
        self.pol = pol
        self.c = c
        self.tau = tau
        self.h = min(ctrl.dt, ctrl.max_step)
        self.prev_err = None
        self.k = np.empty((7, c.size), dtype=np.complex128)
        self.have_k0 = False
        self.n_steps = 0
        self.n_rejected = 0
        self.n_grow = 0
        self.max_tail = 0.0

    @staticmethod
    def _tail(c):
        return float(np.abs(c[-1]) ** 2 + np.abs(c[-2]) ** 2)

    def _grow(self, tail):
        n = self.c.size
        if n >= self.pol.max_dim:
            raise TruncationOverflowError(self.tau, n, tail)
        new = min(self.pol.max_dim, max(n + 1, int(math.ceil(n * self.pol.growth_factor))))
        padded = np.zeros(new, dtype=np.complex128)
        padded[:n] = self.c
        log.debug("basis %d -> %d at tau=%.6g (tail %.3e)", n, new, self.tau, tail)
        self.c = padded
        self.k = np.empty((7, new), dtype=np.complex128)
        self.have_k0 = False
        self.n_grow += 1

    def guard(self, c) -> bool:
        """True if ``c`` passes the tail guard; otherwise enlarge the basis."""
        tail = self._tail(c)
        if tail > self.pol.tail_guard:
            self._grow(tail)
            return False
        self.max_tail = max(self.max_tail, tail)
        return True

    def advance_rk4(self, target):
        span = target - self.tau
        n_sub = max(1, int(math.ceil(span / self.ctrl.dt - 1e-9)))
        h = span / n_sub
        k = 0
        while k < n_sub:
            c_new = self.f.rk4(self.tau, self.c, h)
            if not self.guard(c_new):
                continue
            self.c = c_new
            k += 1
            self.n_steps += 1
            self.tau = target if k == n_sub else self.tau + h

    def advance_rk45(self, target):
        ctrl = self.ctrl
        while self.tau < target:
            remaining = target - self.tau
            last = remaining <= self.h * (1.0 + 1e-12)
            h_try = remaining if last else self.h
            if h_try < ctrl.min_step and not last:
                raise StiffnessError(self.tau, h_try)
            c_new, err_norm = self.f.dp45(self.tau, self.c, h_try, self.k, self.have_k0, ctrl)
            if err_norm <= 1.0:
                if not self.guard(c_new):
                    continue
                h_next = h_try * _factor(err_norm, self.prev_err, True)
                self.prev_err = max(err_norm, 1e-4)
                self.c = c_new
                self.k[0] = self.k[6]
                self.have_k0 = True
                self.tau = target if last else self.tau + h_try
                self.n_steps += 1
                if h_try < self.h:
                    h_next = max(h_next, self.h)
                self.h = min(h_next, ctrl.max_step)
            else:
                # k[0] still holds f(tau, c)
                self.have_k0 = True
                self.n_rejected += 1
                self.h = h_try * _factor(err_norm, None, False)
                if self.h < ctrl.min_step:
                    raise StiffnessError(self.tau, self.h)


def propagate(
    gen: Generator,
    init: FockState,
    tau_end: float,
    ctrl: StepControl | None = None,
    pol: TruncationPolicy | None = None,
    sample_every: float = 0.01,
) -> TimeSeries:
    """Integrate ``i c' = M(tau) c`` from ``init.tau`` to ``tau_end``.

    Samples are taken every ``sample_every`` (plus ``tau_end``). The basis
    starts at ``max(init.dim, pol.initial_dim)`` and grows as the policy
    dictates; a step that trips the tail guard is retried in the larger
    basis.
    """
    ctrl = ctrl or StepControl()
    pol = pol or TruncationPolicy()
    if not tau_end > init.tau:
        raise InvalidParameterError(f"tau_end must exceed start time {init.tau}, got {tau_end}")
    if not sample_every > 0:
        raise InvalidParameterError(f"sample_every must be > 0, got {sample_every}")
    n0 = norm_squared(init)
    if abs(n0 - 1.0) > 1e-12:
        raise InvalidParameterError(f"initial state not normalized (norm^2={n0!r})")
    if init.dim > pol.max_dim:
        raise InvalidParameterError(f"initial dim {init.dim} exceeds max_dim {pol.max_dim}")

    t0 = time.perf_counter()
    c = np.zeros(max(init.dim, pol.initial_dim), dtype=np.complex128)
    c[: init.dim] = init.amplitudes
    integ = _Integrator(gen, ctrl, pol, c, init.tau)
    while not integ.guard(integ.c):
        pass

    taus = sample_grid(init.tau, tau_end, sample_every)
    samples = [integ.c.copy()]
    advance = integ.advance_rk4 if ctrl.method == "rk4" else integ.advance_rk45
    for target in taus[1:]:
        advance(float(target))
        samples.append(integ.c.copy())

    dim = integ.c.size
    amps = np.zeros((len(samples), dim), dtype=np.complex128)
    for i, s in enumerate(samples):
        amps[i, : s.size] = s
    probs = np.abs(amps) ** 2
    norm2 = probs.sum(axis=1)
    x2 = x2_series(amps, gen.params)

    meta = {
        "version": __version__,
        "mode": gen.mode.value,
        "generator": gen.label,
        "params": gen.params.as_dict(),
        "step_control": asdict(ctrl),
        "truncation": asdict(pol),
        "tau_start": float(init.tau),
        "tau_end": float(tau_end),
        "sample_every": float(sample_every),
        "renormalized": False,
    }
    stats = {
        "n_steps": integ.n_steps,
        "n_rejected": integ.n_rejected,
        "n_fev": integ.f.nfev,
        "n_grow": integ.n_grow,
        "max_dim": dim,
        "max_tail": integ.max_tail,
        "norm_drift_max": float(np.max(np.abs(norm2 - 1.0))),
        "norm_drift_final": float(norm2[-1] - 1.0),
        "runtime_s": time.perf_counter() - t0,
    }
    return TimeSeries(taus, amps, probs, norm2, x2, meta, stats)
