"""Oracle-based verification suites behind ``drivenfock verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .fock import Params, vacuum_state
from .generators import build_generator, hermiticity_audit
from .oracle import ClassicalState, ClassicalSystem, coherent_alpha_series, k_constancy_check, poisson_table
from .propagator import StepControl, TruncationPolicy, propagate


@dataclass
class Check:
    suite: str
    name: str
    measured: float
    tolerance: float
    passed: bool
    # "le": pass when measured <= tolerance; "gt": pass when measured > tolerance
    kind: str = "le"

    def line(self) -> str:
        op = "<=" if self.kind == "le" else ">"
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.suite:<18} {self.name:<34} {self.measured:.3e} {op} {self.tolerance:.1e}"


def _le(suite, name, measured, tol):
    return Check(suite, name, float(measured), tol, bool(measured <= tol), "le")


def _gt(suite, name, measured, tol):
    return Check(suite, name, float(measured), tol, bool(measured > tol), "gt")


def hermiticity_suite(epsilons=(1.0, 5.0, 10.0), dim=16, n_tau=100, hbar_bar=0.4, rho=6.25):
    taus = np.linspace(0.0, 20.0, n_tau)
    out = []
    for mode in ("k", "h"):
        for eps in epsilons:
            gen = build_generator(mode, Params(eps, hbar_bar, rho))
            scale = max(float(np.max(np.abs(gen.dense(dim, t)))) for t in taus)
            out.append(_le("hermiticity", f"{mode} eps={eps:g}", hermiticity_audit(gen, dim, taus) / scale, 1e-14))
    return out


def k_constancy_suite(t_end=100.0, dt=1e-3, amplitudes=(0.0, 1.0, 5.0), drives=(2.0, 6.25)):
    out = []
    s0 = ClassicalState(1.0, 0.0, 0.0)
    for A in amplitudes:
        for W in drives:
            sys = ClassicalSystem(1.0, 1.0, A, W)
            out.append(_le("k-constancy", f"A={A:g} Omega={W:g}", k_constancy_check(sys, s0, t_end, dt), 1e-8))
            if A > 0:
                drift = k_constancy_check(sys, s0, t_end, dt, flip_last_term=True)
                out.append(_gt("k-constancy", f"mutant A={A:g} Omega={W:g}", drift, 1e-3))
    return out


def displacement_suite(
    epsilons=(1.0, 5.0, 10.0),
    tau_end=20.0,
    sample_every=0.01,
    rel_tol=1e-10,
    hbar_bar=0.4,
    rho=6.25,
    mutation: float | None = None,
):
    """Fock propagation vs Poisson occupations of the coherent-state oracle.

    ``mutation`` scales the propagated coupling (not the oracle's) and must
    make the suite fail.
    """
    out = []
    ctrl = StepControl(rel_tol=rel_tol)
    for mode in ("k", "h"):
        for eps in epsilons:
            gen = build_generator(mode, Params(eps, hbar_bar, rho))
            run_gen = gen.scaled(mutation) if mutation else gen
            series = propagate(run_gen, vacuum_state(64), tau_end, ctrl, TruncationPolicy(), sample_every)
            alphas = coherent_alpha_series(gen, series.taus)
            ref = poisson_table(alphas, series.dim - 1)
            out.append(_le("displacement", f"{mode} eps={eps:g} max|dp|", np.max(np.abs(series.probs - ref)), 1e-6))
            out.append(_le("unitarity", f"{mode} eps={eps:g} max|norm2-1|", series.stats["norm_drift_max"], 1e-8))
    return out


def cross_integrator_suite(epsilon=10.0, tau_end=20.0, dt=1e-4, rel_tol=1e-10, hbar_bar=0.4, rho=6.25):
    out = []
    for mode in ("k", "h"):
        gen = build_generator(mode, Params(epsilon, hbar_bar, rho))
        a = propagate(gen, vacuum_state(64), tau_end, StepControl(rel_tol=rel_tol), sample_every=tau_end)
        b = propagate(gen, vacuum_state(64), tau_end, StepControl(method="rk4", dt=dt), sample_every=tau_end)
        n = max(a.dim, b.dim)
        ca = np.zeros(n, complex)
        cb = np.zeros(n, complex)
        ca[: a.dim] = a.amplitudes[-1]
        cb[: b.dim] = b.amplitudes[-1]
        out.append(_le("cross-integrator", f"{mode} eps={epsilon:g} rk4 vs rk45", np.max(np.abs(ca - cb)), 1e-7))
    return out


def run_all(quick: bool = False, mutation: float | None = None) -> tuple[list[Check], float]:
    t0 = time.perf_counter()
    if quick:
        checks = (
            hermiticity_suite(epsilons=(5.0,), n_tau=20)
            + k_constancy_suite(t_end=10.0, amplitudes=(0.0, 1.0), drives=(6.25,))
            + displacement_suite(epsilons=(1.0,), tau_end=5.0, mutation=mutation)
            + cross_integrator_suite(epsilon=1.0, tau_end=1.0)
        )
    else:
        checks = (
            hermiticity_suite()
            + k_constancy_suite()
            + displacement_suite(mutation=mutation)
            + cross_integrator_suite()
        )
    return checks, time.perf_counter() - t0
